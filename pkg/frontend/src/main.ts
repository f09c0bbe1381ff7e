// Single-page client: registration with graphical enrollment, upload with
// CIA selectors, and ring-appropriate challenge completion.

import { ApiClient, ApiError, Catalog, ObjectMeta } from "./api.js";
import { ChallengeViewState, EnrollmentState, UploadFormState } from "./state.js";

const api = new ApiClient(window.location.origin);
const root = document.getElementById("app") as HTMLElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function errorBox(message: string): HTMLElement {
  return el("p", { class: "error" }, message);
}

async function showAuth(): Promise<void> {
  const catalog = await api.catalog();
  root.replaceChildren(
    el("h1", {}, "RingVault"),
    loginForm(),
    el("h2", {}, "Register"),
    registerForm(catalog),
  );
}

function loginForm(): HTMLElement {
  const username = el("input", { placeholder: "username" });
  const password = el("input", { placeholder: "password", type: "password" });
  const status = el("div");
  const button = el("button", {}, "Log in");
  button.onclick = async () => {
    status.replaceChildren();
    try {
      await api.login(username.value, password.value);
      await showDashboard();
    } catch (e) {
      status.replaceChildren(errorBox(messageOf(e)));
    }
  };
  return el("div", { class: "login" },
    el("h2", {}, "Log in"), username, password, button, status);
}

function registerForm(catalog: Catalog): HTMLElement {
  const enrollment = new EnrollmentState(catalog);
  const username = el("input", { placeholder: "username" });
  const password = el("input", { placeholder: "password", type: "password" });
  const email = el("input", { placeholder: "email" });
  const mobile = el("input", { placeholder: "mobile" });
  const status = el("div");
  const submit = el("button", { disabled: "" }, "Register") as HTMLButtonElement;

  const rows = catalog.sets.map((set, rowIdx) => {
    const row = el("div", { class: "image-row" });
    for (const entry of set) {
      const img = el("img", {
        src: api.assetUrl(entry.asset_ref),
        alt: entry.label,
        title: entry.label,
      });
      img.onclick = () => {
        enrollment.select(rowIdx, entry.image_id);
        row.querySelectorAll("img").forEach((n) => n.classList.remove("picked"));
        img.classList.add("picked");
        submit.disabled = !enrollment.canSubmit;
      };
      row.append(img);
    }
    return row;
  });

  submit.onclick = async () => {
    status.replaceChildren();
    try {
      await api.register(username.value, password.value, email.value,
        mobile.value, enrollment.selections);
      status.replaceChildren(el("p", {}, "Registered. You can log in now."));
    } catch (e) {
      status.replaceChildren(errorBox(messageOf(e)));
    }
  };

  return el("div", { class: "register" },
    username, password, email, mobile,
    el("p", {}, "Pick one image from each row as your graphical password:"),
    ...rows, submit, status);
}

async function showDashboard(): Promise<void> {
  const objects = await api.listObjects();
  root.replaceChildren(
    el("h1", {}, "Your objects"),
    uploadForm(),
    objectList(objects),
  );
}

function uploadForm(): HTMLElement {
  const form = new UploadFormState();
  const file = el("input", { type: "file" }) as HTMLInputElement;
  const encrypted = el("input", { type: "checkbox" }) as HTMLInputElement;
  const status = el("div");

  const selector = (field: "c" | "i" | "a", label: string) => {
    const select = el("select") as HTMLSelectElement;
    for (const level of form.ciaLevels) {
      select.append(el("option", { value: String(level) }, String(level)));
    }
    select.value = "5";
    select.onchange = () => form.setLevel(field, Number(select.value));
    return el("label", {}, `${label}: `, select);
  };

  file.onchange = async () => {
    const chosen = file.files?.[0];
    if (chosen) {
      form.setFile(chosen.name, new Uint8Array(await chosen.arrayBuffer()));
    }
  };

  const button = el("button", {}, "Upload");
  button.onclick = async () => {
    status.replaceChildren();
    if (!form.canSubmit) {
      status.replaceChildren(errorBox("choose a file first"));
      return;
    }
    try {
      const meta = await api.upload(form.fileName!, form.payload!,
        form.c, form.i, form.a, encrypted.checked);
      status.replaceChildren(
        el("p", {}, `Uploaded ${meta.name} `, ringBadge(meta.ring)));
      await showDashboard();
    } catch (e) {
      status.replaceChildren(errorBox(messageOf(e)));
    }
  };

  return el("div", { class: "upload" },
    el("h2", {}, "Upload"), file,
    selector("c", "Confidentiality"), selector("i", "Integrity"),
    selector("a", "Availability"),
    el("label", {}, encrypted, " client-encrypted envelope"),
    button, status);
}

function ringBadge(ring: number): HTMLElement {
  return el("span", { class: `ring-badge ring-${ring}` }, `Ring ${ring}`);
}

function objectList(objects: ObjectMeta[]): HTMLElement {
  const list = el("ul", { class: "objects" });
  for (const obj of objects) {
    const download = el("button", {}, "Download");
    const slot = el("span");
    download.onclick = () => startChallenge(obj, slot);
    list.append(el("li", {}, obj.name, " ", ringBadge(obj.ring),
      obj.encrypted ? " (encrypted)" : "", " ", download, slot));
  }
  return list;
}

async function startChallenge(obj: ObjectMeta, slot: HTMLElement): Promise<void> {
  const info = await api.requestAccess(obj.object_id);
  const view = new ChallengeViewState(info);
  const status = el("div");
  const submit = el("button", {}, "Submit") as HTMLButtonElement;
  const body = el("div", { class: "challenge" });

  if (view.kind === "graphical") {
    const catalog = await api.catalog();
    const labelOf = new Map(
      catalog.sets.flat().map((e) => [e.image_id, e] as const));
    view.presentedSets.forEach((rowIds, rowIdx) => {
      const row = el("div", { class: "image-row" });
      // server order, verbatim
      for (const id of rowIds) {
        const entry = labelOf.get(id)!;
        const img = el("img", {
          src: api.assetUrl(entry.asset_ref), alt: entry.label,
        });
        img.onclick = () => {
          view.selectImage(rowIdx, id);
          row.querySelectorAll("img").forEach((n) => n.classList.remove("picked"));
          img.classList.add("picked");
        };
        row.append(img);
      }
      body.append(row);
    });
  } else if (view.kind === "otp") {
    const input = el("input", {
      placeholder: "10-character code", maxlength: "10",
    });
    input.oninput = () => { view.otpBuffer = input.value; };
    body.append(el("p", {}, "Enter the one-time password sent to your mobile:"),
      input);
  } else {
    const input = el("input", { type: "password", placeholder: "password" });
    input.oninput = () => { view.passwordBuffer = input.value; };
    body.append(el("p", {}, "Re-enter your password:"), input);
  }

  submit.onclick = async () => {
    status.replaceChildren();
    if (!view.canSubmit) {
      status.replaceChildren(errorBox("answer incomplete"));
      return;
    }
    try {
      const grant = await api.answerChallenge(view.challengeId, view.answer);
      const payload = await api.download(grant.grant_id);
      triggerSave(obj.name, payload);
      slot.replaceChildren();
    } catch {
      view.failed = true;
      status.replaceChildren(errorBox("Challenge failed."));
    }
  };

  slot.replaceChildren(body, submit, status);
}

function triggerSave(name: string, payload: Uint8Array): void {
  const url = URL.createObjectURL(new Blob([payload.buffer as ArrayBuffer]));
  const anchor = el("a", { href: url, download: name });
  anchor.click();
  URL.revokeObjectURL(url);
}

function messageOf(e: unknown): string {
  return e instanceof ApiError ? e.message : "request failed";
}

showAuth().catch((e) => root.replaceChildren(errorBox(messageOf(e))));
