import { describe, expect, it } from "vitest";
import {
  ER_SCHEME,
  SRL_SCHEME,
  bioTags,
  bioToSpans,
  clearSpan,
  labelSpan,
  spansToBio,
  validateBio,
  type Span,
} from "../src/bio";
import { mulberry32, pick, randInt } from "./rng";

describe("tag universes", () => {
  it("lists O first, then B/I pairs in label order", () => {
    expect(bioTags(SRL_SCHEME)).toEqual([
      "O",
      "B-A", "I-A",
      "B-PS", "I-PS",
      "B-BN", "I-BN",
      "B-G", "I-G",
      "B-L", "I-L",
      "B-T", "I-T",
    ]);
    expect(bioTags(ER_SCHEME)).toHaveLength(9);
    expect(bioTags(ER_SCHEME)[1]).toBe("B-PERSON");
  });
});

describe("labelSpan", () => {
  it("labels a contiguous range on an empty overlay", () => {
    const spans = labelSpan([], 1, 2, "PATIENT");
    expect(spans).toEqual([{ start: 1, end: 2, label: "PATIENT" }]);
    expect(spansToBio(spans, 6, SRL_SCHEME)).toEqual(["O", "B-PS", "I-PS", "O", "O", "O"]);
  });

  it("treats anchor and focus as order-free", () => {
    expect(labelSpan([], 4, 2, "TIME")).toEqual(labelSpan([], 2, 4, "TIME"));
  });

  it("replaces overlapped spans and trims partial overlaps", () => {
    let spans = labelSpan([], 0, 2, "AGENT");
    spans = labelSpan(spans, 2, 4, "PATIENT");
    expect(spans).toEqual([
      { start: 0, end: 1, label: "AGENT" },
      { start: 2, end: 4, label: "PATIENT" },
    ]);
  });

  it("splits a span when relabeling a strict sub-range", () => {
    let spans = labelSpan([], 0, 3, "AGENT");
    spans = labelSpan(spans, 1, 2, "TIME");
    expect(spans).toEqual([
      { start: 0, end: 0, label: "AGENT" },
      { start: 1, end: 2, label: "TIME" },
      { start: 3, end: 3, label: "AGENT" },
    ]);
    expect(spansToBio(spans, 4, SRL_SCHEME)).toEqual(["B-A", "B-T", "I-T", "B-A"]);
  });

  it("keeps adjacent same-label spans separate", () => {
    let spans = labelSpan([], 0, 0, "AGENT");
    spans = labelSpan(spans, 1, 1, "AGENT");
    expect(spans).toHaveLength(2);
    expect(spansToBio(spans, 2, SRL_SCHEME)).toEqual(["B-A", "B-A"]);
  });
});

describe("clearSpan", () => {
  it("splits a covering span around the cleared range", () => {
    const spans = clearSpan(labelSpan([], 0, 4, "AGENT"), 2, 2);
    expect(spans).toEqual([
      { start: 0, end: 1, label: "AGENT" },
      { start: 3, end: 4, label: "AGENT" },
    ]);
    expect(spansToBio(spans, 5, SRL_SCHEME)).toEqual(["B-A", "I-A", "O", "B-A", "I-A"]);
  });

  it("removes spans wholly inside the range and keeps the rest", () => {
    let spans = labelSpan([], 0, 0, "GREET");
    spans = labelSpan(spans, 2, 3, "TIME");
    expect(clearSpan(spans, 1, 4)).toEqual([{ start: 0, end: 0, label: "GREET" }]);
  });
});

describe("BIO serialization", () => {
  it("round-trips well-formed tag sequences exactly", () => {
    const tags = ["B-A", "I-A", "O", "B-PS", "B-PS", "I-PS", "O", "B-G"];
    expect(spansToBio(bioToSpans(tags, SRL_SCHEME), tags.length, SRL_SCHEME)).toEqual(tags);
  });

  it("reads a stray continuation as a fresh span, like the service repair", () => {
    const spans = bioToSpans(["I-A", "I-A", "O", "I-PS"], SRL_SCHEME);
    expect(spans).toEqual([
      { start: 0, end: 1, label: "AGENT" },
      { start: 3, end: 3, label: "PATIENT" },
    ]);
    expect(spansToBio(spans, 4, SRL_SCHEME)).toEqual(["B-A", "I-A", "O", "B-PS"]);
  });

  it("starts a new span when the continuation label differs", () => {
    expect(bioToSpans(["B-A", "I-PS"], SRL_SCHEME)).toEqual([
      { start: 0, end: 0, label: "AGENT" },
      { start: 1, end: 1, label: "PATIENT" },
    ]);
  });
});

describe("validateBio", () => {
  it("accepts well-formed sequences on both schemes", () => {
    expect(validateBio(["O", "B-A", "I-A", "B-T"], SRL_SCHEME)).toBeNull();
    expect(validateBio(["B-PERSON", "I-PERSON", "O"], ER_SCHEME)).toBeNull();
  });

  it("rejects tags outside the scheme", () => {
    expect(validateBio(["B-PERSON"], SRL_SCHEME)).toMatch(/unknown SRL tag/);
    expect(validateBio(["B-A"], ER_SCHEME)).toMatch(/unknown ER tag/);
  });

  it("rejects continuations that follow nothing or the wrong code", () => {
    expect(validateBio(["O", "I-A"], SRL_SCHEME)).toMatch(/does not continue/);
    expect(validateBio(["B-A", "I-PS"], SRL_SCHEME)).toMatch(/does not continue/);
    expect(validateBio(["I-MISC"], ER_SCHEME)).toMatch(/position 0/);
  });
});

describe("edit-sequence invariants", () => {
  it("keeps overlays sorted, non-overlapping, and BIO-convertible across 1000 random sequences", () => {
    const rng = mulberry32(0x5eed);
    for (let caseNo = 0; caseNo < 1000; caseNo++) {
      const scheme = rng() < 0.5 ? SRL_SCHEME : ER_SCHEME;
      const length = 1 + randInt(rng, 30);
      let spans: Span[] = [];
      const edits = 1 + randInt(rng, 12);
      for (let e = 0; e < edits; e++) {
        const a = randInt(rng, length);
        const b = randInt(rng, length);
        spans = rng() < 0.8 ? labelSpan(spans, a, b, pick(rng, scheme.labels)) : clearSpan(spans, a, b);

        for (let i = 0; i < spans.length; i++) {
          expect(spans[i].start).toBeLessThanOrEqual(spans[i].end);
          expect(spans[i].start).toBeGreaterThanOrEqual(0);
          expect(spans[i].end).toBeLessThan(length);
          if (i > 0) expect(spans[i].start).toBeGreaterThan(spans[i - 1].end);
        }
        const tags = spansToBio(spans, length, scheme);
        expect(tags).toHaveLength(length);
        expect(validateBio(tags, scheme)).toBeNull();
        expect(bioToSpans(tags, scheme)).toEqual(spans);
      }
    }
  });
});
