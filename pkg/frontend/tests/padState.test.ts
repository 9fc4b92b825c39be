import { describe, expect, it } from "vitest";

import { PadQuestion } from "../src/padState.js";

const single = () => new PadQuestion("q1", "single", ["a", "b", "c"]);
const multiple = () => new PadQuestion("q1", "multiple", ["a", "b", "c"]);

describe("selection rules", () => {
  it("single choice is exclusive", () => {
    const p = single();
    p.toggle("a");
    p.toggle("b");
    expect(p.selection()).toEqual(["b"]);
  });

  it("multiple choice toggles independently", () => {
    const p = multiple();
    p.toggle("a");
    p.toggle("c");
    expect(p.selection()).toEqual(["a", "c"]);
    p.toggle("a");
    expect(p.selection()).toEqual(["c"]);
  });

  it("ignores unknown option ids", () => {
    const p = single();
    expect(p.toggle("nope")).toBe(false);
    expect(p.selection()).toEqual([]);
  });
});

describe("submit lifecycle", () => {
  it("will not submit an empty selection", () => {
    expect(single().beginSubmit()).toBeNull();
  });

  it("tracks Sent then Replaced", () => {
    const p = single();
    p.toggle("a");
    expect(p.beginSubmit()).toEqual(["a"]);
    expect(p.finishSubmit("accepted")).toBe(false);
    expect(p.submitState).toBe("Sent");

    p.toggle("b");
    expect(p.beginSubmit()).toEqual(["b"]);
    p.finishSubmit("replaced");
    expect(p.submitState).toBe("Replaced");
  });

  it("queues exactly one replacement while a submit is in flight", () => {
    const p = single();
    p.toggle("a");
    expect(p.beginSubmit()).toEqual(["a"]);
    // two clicks while in flight collapse into one queued resend
    p.toggle("b");
    expect(p.beginSubmit()).toBeNull();
    p.toggle("c");
    expect(p.beginSubmit()).toBeNull();
    expect(p.finishSubmit("accepted")).toBe(true);
    expect(p.beginSubmit()).toEqual(["c"]);
    expect(p.finishSubmit("replaced")).toBe(false);
  });
});

describe("close semantics", () => {
  it("disables inputs and rejects late attempts", () => {
    const p = single();
    p.toggle("a");
    p.close();
    expect(p.inputsDisabled).toBe(true);
    expect(p.toggle("b")).toBe(false);
    expect(p.beginSubmit()).toBeNull();
    expect(p.submitState).toBe("Rejected");
  });

  it("drops a queued replacement when the window closes mid-flight", () => {
    const p = single();
    p.toggle("a");
    p.beginSubmit();
    p.toggle("b");
    p.beginSubmit();
    p.close();
    expect(p.finishSubmit("accepted")).toBe(false);
  });
});
