// Typed client for the storage server's HTTP/JSON API. This is the only
// channel the UI uses.

export interface CatalogEntry {
  image_id: number;
  label: string;
  asset_ref: string;
}

export interface Catalog {
  sets: CatalogEntry[][];
}

export interface ObjectMeta {
  object_id: string;
  name: string;
  cia: { c: number; i: number; a: number };
  ring: number;
  encrypted: boolean;
  size_bytes: number;
  created_at: number;
}

export type ChallengeKind = "otp" | "graphical" | "password";

export interface ChallengeInfo {
  kind: ChallengeKind;
  challenge_id: string;
  issued_at: number;
  ttl_seconds: number;
  presented_sets?: number[][];
}

export interface GrantInfo {
  grant_id: string;
  issued_at: number;
  ttl_seconds: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  token: string | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let code = "Error";
      let message = resp.statusText;
      try {
        const parsed = await resp.json();
        code = parsed.error ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp;
  }

  async register(username: string, password: string, email: string,
                 mobile: string, selections: number[]): Promise<void> {
    await this.request("POST", "/register", {
      username, password, email, mobile, graphical_selections: selections,
    });
  }

  async login(username: string, password: string): Promise<void> {
    const resp = await this.request("POST", "/login", { username, password });
    this.token = (await resp.json()).token;
  }

  async catalog(): Promise<Catalog> {
    return (await this.request("GET", "/catalog")).json();
  }

  async upload(name: string, payload: Uint8Array, c: number, i: number,
               a: number, encrypted: boolean): Promise<ObjectMeta> {
    const resp = await this.request("POST", "/objects", {
      name,
      payload_b64: toBase64(payload),
      confidentiality: c,
      integrity: i,
      availability: a,
      encrypted,
    });
    return resp.json();
  }

  async listObjects(): Promise<ObjectMeta[]> {
    const resp = await this.request("GET", "/objects");
    return (await resp.json()).objects;
  }

  async requestAccess(objectId: string): Promise<ChallengeInfo> {
    return (await this.request(
      "POST", `/objects/${objectId}/access-request`, {})).json();
  }

  async answerChallenge(challengeId: string,
                        answer: string | number[]): Promise<GrantInfo> {
    return (await this.request(
      "POST", `/challenges/${challengeId}/answer`, { answer })).json();
  }

  async download(grantId: string): Promise<Uint8Array> {
    const resp = await this.request("GET", `/download/${grantId}`);
    return new Uint8Array(await resp.arrayBuffer());
  }

  assetUrl(ref: string): string {
    return `${this.baseUrl}/assets/${ref}`;
  }
}

export function toBase64(data: Uint8Array): string {
  let binary = "";
  for (const b of data) binary += String.fromCharCode(b);
  // btoa exists in browsers; Buffer covers the node test environment
  if (typeof btoa === "function") return btoa(binary);
  return Buffer.from(data).toString("base64");
}
