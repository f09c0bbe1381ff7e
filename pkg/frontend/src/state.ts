// View-state logic, kept free of DOM access so it is testable headless.

import { Catalog, ChallengeInfo, ChallengeKind } from "./api.js";

/** Enrollment grid: three rows of eight, exactly one pick per row. */
export class EnrollmentState {
  private picks: (number | null)[] = [null, null, null];

  constructor(readonly catalog: Catalog) {
    if (catalog.sets.length !== 3) throw new Error("catalog must have 3 sets");
  }

  /** Selecting within a row replaces that row's previous pick. */
  select(row: number, imageId: number): void {
    const ids = this.catalog.sets[row].map((e) => e.image_id);
    if (!ids.includes(imageId)) throw new Error(`id ${imageId} not in row ${row}`);
    this.picks[row] = imageId;
  }

  selection(row: number): number | null {
    return this.picks[row];
  }

  get canSubmit(): boolean {
    return this.picks.every((p) => p !== null);
  }

  get selections(): number[] {
    if (!this.canSubmit) throw new Error("a row is unselected");
    return this.picks.slice() as number[];
  }
}

/** Upload form: CIA selectors are bounded 1..10 by construction. */
export class UploadFormState {
  readonly ciaLevels = Array.from({ length: 10 }, (_, k) => k + 1);
  c = 5;
  i = 5;
  a = 5;
  encrypted = false;
  fileName: string | null = null;
  payload: Uint8Array | null = null;

  setLevel(field: "c" | "i" | "a", value: number): void {
    if (!this.ciaLevels.includes(value)) throw new Error(`level ${value} out of range`);
    this[field] = value;
  }

  setFile(name: string, payload: Uint8Array): void {
    this.fileName = name;
    this.payload = payload;
  }

  get canSubmit(): boolean {
    return this.payload !== null;
  }
}

export const OTP_PATTERN = /^[0-9A-Fa-f]{10}$/;

/** Challenge answering, one instance per pending challenge. */
export class ChallengeViewState {
  readonly kind: ChallengeKind;
  readonly challengeId: string;
  /** Graphical rows exactly as the server presented them; never re-sorted. */
  readonly presentedSets: number[][];
  private picks: (number | null)[] = [null, null, null];
  otpBuffer = "";
  passwordBuffer = "";
  /** Generic failure flag; the server gives no reason and neither do we. */
  failed = false;

  constructor(info: ChallengeInfo) {
    this.kind = info.kind;
    this.challengeId = info.challenge_id;
    this.presentedSets = (info.presented_sets ?? []).map((row) => row.slice());
  }

  selectImage(row: number, imageId: number): void {
    if (this.kind !== "graphical") throw new Error("not a graphical challenge");
    if (!this.presentedSets[row].includes(imageId)) {
      throw new Error(`id ${imageId} not presented in row ${row}`);
    }
    this.picks[row] = imageId;
  }

  get canSubmit(): boolean {
    switch (this.kind) {
      case "graphical":
        return this.picks.every((p) => p !== null);
      case "otp":
        return OTP_PATTERN.test(this.otpBuffer);
      case "password":
        return this.passwordBuffer.length > 0;
    }
  }

  /** The ids to submit, in set order, independent of display order. */
  get answer(): string | number[] {
    if (!this.canSubmit) throw new Error("answer incomplete");
    if (this.kind === "graphical") return this.picks.slice() as number[];
    if (this.kind === "otp") return this.otpBuffer.toUpperCase();
    return this.passwordBuffer;
  }
}
