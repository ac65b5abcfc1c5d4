import { describe, expect, it } from "vitest";
import type { Task } from "../src/api";
import { ER_SCHEME, SRL_SCHEME, validateBio } from "../src/bio";
import {
  applyClear,
  applyClearAll,
  applyLabel,
  applyUndo,
  beginSession,
  extendTo,
  inSelection,
  moveFocus,
  serializeSession,
  singleToken,
} from "../src/state";
import { mulberry32, pick, randInt } from "./rng";

const makeTask = (srl: string[], er: string[]): Task => ({
  sentence_id: "t-0001",
  tokens: srl.map((_tag, i) => `tok${i}`),
  predicate_index: 0,
  pre: {
    srl_tags: srl,
    srl_path_prob: 0.42,
    er_tags: er,
    er_confidence: srl.map(() => 0.9),
    snapshot_version: 3,
  },
  status: "assigned",
});

const SRL_PRE = ["B-A", "I-A", "B-PS", "O", "B-G", "I-G"];
const ER_PRE = ["O", "B-PERSON", "O", "O", "B-MISC", "O"];

describe("edit sessions", () => {
  it("serializes an untouched session byte-identically to the suggestions", () => {
    const task = makeTask(SRL_PRE, ER_PRE);
    const out = serializeSession(beginSession(task));
    expect(out.srl_tags).toEqual(SRL_PRE);
    expect(out.er_tags).toEqual(ER_PRE);
    expect(out.srl_tags).not.toBe(task.pre.srl_tags);
  });

  it("edits one layer without disturbing the other", () => {
    let session = beginSession(makeTask(SRL_PRE, ER_PRE));
    session = applyLabel(session, "er", 2, 3, "ORGANIZATION");
    const out = serializeSession(session);
    expect(out.srl_tags).toEqual(SRL_PRE);
    expect(out.er_tags).toEqual(["O", "B-PERSON", "B-ORGANIZATION", "I-ORGANIZATION", "B-MISC", "O"]);
  });

  it("undoes edits back to the exact prior overlay, one step at a time", () => {
    const start = beginSession(makeTask(SRL_PRE, ER_PRE));
    const afterOne = applyLabel(start, "srl", 3, 5, "TIME");
    const afterTwo = applyClear(afterOne, "er", 0, 5);

    const undoneOnce = applyUndo(afterTwo);
    expect(undoneOnce.overlay).toEqual(afterOne.overlay);
    const undoneTwice = applyUndo(undoneOnce);
    expect(undoneTwice.overlay).toEqual(start.overlay);
    expect(serializeSession(undoneTwice).srl_tags).toEqual(SRL_PRE);
  });

  it("treats undo on a fresh session as a no-op", () => {
    const session = beginSession(makeTask(SRL_PRE, ER_PRE));
    expect(applyUndo(session)).toBe(session);
  });

  it("clears both layers in one undoable step", () => {
    let session = beginSession(makeTask(SRL_PRE, ER_PRE));
    session = applyClearAll(session);
    const cleared = serializeSession(session);
    expect(cleared.srl_tags).toEqual(["O", "O", "O", "O", "O", "O"]);
    expect(cleared.er_tags).toEqual(["O", "O", "O", "O", "O", "O"]);
    session = applyUndo(session);
    expect(serializeSession(session).srl_tags).toEqual(SRL_PRE);
  });

  it("keeps serialized tags valid and undo exact across random edit runs", () => {
    const rng = mulberry32(77);
    for (let run = 0; run < 200; run++) {
      const original = beginSession(makeTask(SRL_PRE, ER_PRE));
      let session = original;
      const steps = 1 + randInt(rng, 8);
      for (let s = 0; s < steps; s++) {
        const layer = rng() < 0.5 ? ("srl" as const) : ("er" as const);
        const a = randInt(rng, 6);
        const b = randInt(rng, 6);
        session =
          rng() < 0.75
            ? applyLabel(session, layer, a, b, pick(rng, layer === "srl" ? SRL_SCHEME.labels : ER_SCHEME.labels))
            : applyClear(session, layer, a, b);
        const out = serializeSession(session);
        expect(validateBio(out.srl_tags, SRL_SCHEME)).toBeNull();
        expect(validateBio(out.er_tags, ER_SCHEME)).toBeNull();
      }
      for (let s = 0; s < steps; s++) session = applyUndo(session);
      expect(session.overlay).toEqual(original.overlay);
      expect(serializeSession(session).srl_tags).toEqual(SRL_PRE);
      expect(serializeSession(session).er_tags).toEqual(ER_PRE);
    }
  });
});

describe("selections", () => {
  it("builds contiguous ranges from anchor and focus in either order", () => {
    const sel = extendTo(singleToken(4), 1);
    expect(inSelection(sel, 1)).toBe(true);
    expect(inSelection(sel, 3)).toBe(true);
    expect(inSelection(sel, 4)).toBe(true);
    expect(inSelection(sel, 5)).toBe(false);
    expect(inSelection(null, 0)).toBe(false);
  });

  it("moves the focus with clamping and collapses unless extending", () => {
    let sel = moveFocus(null, 1, 6, false);
    expect(sel).toEqual({ anchor: 0, focus: 0 });
    sel = moveFocus(sel, 1, 6, true);
    expect(sel).toEqual({ anchor: 0, focus: 1 });
    sel = moveFocus(sel, 1, 6, false);
    expect(sel).toEqual({ anchor: 2, focus: 2 });
    sel = moveFocus(sel, 100, 6, true);
    expect(sel).toEqual({ anchor: 2, focus: 5 });
    sel = moveFocus(sel, -100, 6, false);
    expect(sel).toEqual({ anchor: 0, focus: 0 });
  });
});
