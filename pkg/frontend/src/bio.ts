// ---------------------------
// Label inventories
// ---------------------------
// The service validates submissions against fixed tag sets but does not
// expose them over HTTP, so the UI carries its own copy. Codes are the short
// forms used inside B-/I- tags; role labels abbreviate, entity labels double
// as their own codes. Keyboard order follows list order (key 1 = first).

export type Layer = "srl" | "er";

export type LabelScheme = {
  task: string;
  labels: string[];
  codes: string[];
};

export const SRL_SCHEME: LabelScheme = {
  task: "SRL",
  labels: ["AGENT", "PATIENT", "BENEFACTOR", "GREET", "LOCATION", "TIME"],
  codes: ["A", "PS", "BN", "G", "L", "T"],
};

export const ER_SCHEME: LabelScheme = {
  task: "ER",
  labels: ["PERSON", "LOCATION", "ORGANIZATION", "MISC"],
  codes: ["PERSON", "LOCATION", "ORGANIZATION", "MISC"],
};

export const schemeFor = (layer: Layer): LabelScheme =>
  layer === "srl" ? SRL_SCHEME : ER_SCHEME;

// Full tag universe: O first, then B/I pairs in label order.
export const bioTags = (scheme: LabelScheme): string[] => {
  const tags = ["O"];
  for (const code of scheme.codes) tags.push(`B-${code}`, `I-${code}`);
  return tags;
};

export const codeOf = (scheme: LabelScheme, label: string): string => {
  const i = scheme.labels.indexOf(label);
  if (i < 0) throw new Error(`unknown ${scheme.task} label ${label}`);
  return scheme.codes[i];
};

export const labelOf = (scheme: LabelScheme, code: string): string => {
  const i = scheme.codes.indexOf(code);
  if (i < 0) throw new Error(`unknown ${scheme.task} code ${code}`);
  return scheme.labels[i];
};

// ---------------------------
// Span overlay
// ---------------------------
// One layer's annotation is a list of labeled token ranges (inclusive ends),
// kept sorted by start and never overlapping. Every edit goes through
// labelSpan/clearSpan, which preserve both properties, so any overlay state
// reachable through the UI serializes to well-formed BIO.

export type Span = {
  start: number;
  end: number;
  label: string;
};

// Pieces of `span` that survive outside [start, end]. A span fully inside
// the range vanishes; one sticking out keeps its remainder on that side.
const trimAround = (span: Span, start: number, end: number): Span[] => {
  if (span.end < start || span.start > end) return [span];
  const kept: Span[] = [];
  if (span.start < start) kept.push({ start: span.start, end: start - 1, label: span.label });
  if (span.end > end) kept.push({ start: end + 1, end: span.end, label: span.label });
  return kept;
};

// Assign `label` to the contiguous range between anchor and focus (either
// order). Existing spans in the way are replaced; partial overlaps are
// trimmed back, so relabeling a sub-range splits the old span around it.
// Adjacent same-label spans stay separate spans: each labeling action is its
// own span, and serialization keeps the distinction with a fresh B- tag.
export const labelSpan = (spans: Span[], anchor: number, focus: number, label: string): Span[] => {
  const start = Math.min(anchor, focus);
  const end = Math.max(anchor, focus);
  const next = spans.flatMap((s) => trimAround(s, start, end));
  next.push({ start, end, label });
  next.sort((a, b) => a.start - b.start);
  return next;
};

// Remove any labeling from the range; the O region between spans.
export const clearSpan = (spans: Span[], anchor: number, focus: number): Span[] => {
  const start = Math.min(anchor, focus);
  const end = Math.max(anchor, focus);
  return spans.flatMap((s) => trimAround(s, start, end));
};

export const spanAt = (spans: Span[], index: number): Span | null =>
  spans.find((s) => s.start <= index && index <= s.end) ?? null;

// ---------------------------
// BIO serialization
// ---------------------------

export const spansToBio = (spans: Span[], length: number, scheme: LabelScheme): string[] => {
  const tags: string[] = new Array(length).fill("O");
  for (const s of spans) {
    const code = codeOf(scheme, s.label);
    tags[s.start] = `B-${code}`;
    for (let i = s.start + 1; i <= s.end; i++) tags[i] = `I-${code}`;
  }
  return tags;
};

// Inverse of spansToBio on well-formed input. A stray I-x that continues
// nothing opens a new span, matching the service's own repair rule, so
// reading never fails.
export const bioToSpans = (tags: string[], scheme: LabelScheme): Span[] => {
  const spans: Span[] = [];
  let open: Span | null = null;
  tags.forEach((tag, i) => {
    if (!tag.startsWith("B-") && !tag.startsWith("I-")) {
      open = null;
      return;
    }
    const label = labelOf(scheme, tag.slice(2));
    if (tag.startsWith("I-") && open !== null && open.label === label) {
      open.end = i;
      return;
    }
    open = { start: i, end: i, label };
    spans.push(open);
  });
  return spans;
};

// Client-side mirror of the server-side check, same rules in the same order:
// every tag must be in the scheme's universe, and I-x must continue a B-x or
// I-x run. Returns a reason string, or null when the sequence is acceptable.
export const validateBio = (tags: string[], scheme: LabelScheme): string | null => {
  const universe = new Set(bioTags(scheme));
  let prevCode: string | null = null;
  for (let i = 0; i < tags.length; i++) {
    const tag = tags[i];
    if (!universe.has(tag)) {
      return `unknown ${scheme.task} tag "${tag}" at position ${i}`;
    }
    if (tag.startsWith("I-")) {
      const code = tag.slice(2);
      if (prevCode !== code) {
        return `${scheme.task} tag "${tag}" at position ${i} does not continue a span`;
      }
      prevCode = code;
    } else if (tag.startsWith("B-")) {
      prevCode = tag.slice(2);
    } else {
      prevCode = null;
    }
  }
  return null;
};
