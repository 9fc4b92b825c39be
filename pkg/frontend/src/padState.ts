// Selection and submission state for one question on the answer pad,
// DOM-free so the close/replace/reject rules are testable headlessly.
//
// At most one submit is in flight per question; selection changes made
// meanwhile queue exactly one replacement.

export type SubmitState = "Draft" | "Sent" | "Replaced" | "Rejected";

export class PadQuestion {
  private chosen = new Set<string>();
  private state: SubmitState = "Draft";
  private inFlight = false;
  private replacementQueued = false;
  private closed = false;

  constructor(public readonly questionId: string,
              public readonly kind: "single" | "multiple",
              private optionIds: string[]) {}

  get submitState(): SubmitState {
    return this.state;
  }

  get inputsDisabled(): boolean {
    return this.closed;
  }

  selection(): string[] {
    return this.optionIds.filter((id) => this.chosen.has(id));
  }

  // single-choice selectors are exclusive; multiple-choice toggle freely
  toggle(optionId: string): boolean {
    if (this.closed || !this.optionIds.includes(optionId)) return false;
    if (this.kind === "single") {
      this.chosen.clear();
      this.chosen.add(optionId);
    } else if (this.chosen.has(optionId)) {
      this.chosen.delete(optionId);
    } else {
      this.chosen.add(optionId);
    }
    return true;
  }

  // returns the selection to send, or null when a submit must not start
  beginSubmit(): string[] | null {
    if (this.closed) {
      this.state = "Rejected";
      return null;
    }
    if (this.chosen.size === 0) return null;
    if (this.inFlight) {
      this.replacementQueued = true;
      return null;
    }
    this.inFlight = true;
    return this.selection();
  }

  // resolve the in-flight submit; returns true when a queued replacement
  // should be sent right away
  finishSubmit(outcome: "accepted" | "replaced" | "rejected"): boolean {
    this.inFlight = false;
    this.state = outcome === "accepted" ? "Sent"
      : outcome === "replaced" ? "Replaced" : "Rejected";
    if (this.replacementQueued && outcome !== "rejected" && !this.closed) {
      this.replacementQueued = false;
      return true;
    }
    this.replacementQueued = false;
    return false;
  }

  close(): void {
    this.closed = true;
  }
}
