// ---------------------------
// Edit session
// ---------------------------
// Pure model behind the annotation view. A session wraps one assigned task
// with an editable span overlay per layer, seeded from the server's
// suggestions, plus an undo stack of full overlay snapshots. All transitions
// return new objects; DOM code only ever re-renders from the latest value.
//
// Untouched sessions serialize byte-identically to the suggestions they were
// seeded from, so accepting a suggestion as-is submits exactly what the
// server proposed.

import type { Task } from "./api";
import {
  ER_SCHEME,
  SRL_SCHEME,
  bioToSpans,
  clearSpan,
  labelSpan,
  spansToBio,
  type Layer,
  type Span,
} from "./bio";

export type Overlay = {
  srl: Span[];
  er: Span[];
};

export type EditSession = {
  task: Task;
  overlay: Overlay;
  undoStack: Overlay[];
};

export const beginSession = (task: Task): EditSession => ({
  task,
  overlay: {
    srl: bioToSpans(task.pre.srl_tags, SRL_SCHEME),
    er: bioToSpans(task.pre.er_tags, ER_SCHEME),
  },
  undoStack: [],
});

const withLayer = (overlay: Overlay, layer: Layer, spans: Span[]): Overlay =>
  layer === "srl" ? { ...overlay, srl: spans } : { ...overlay, er: spans };

const pushEdit = (session: EditSession, overlay: Overlay): EditSession => ({
  ...session,
  overlay,
  undoStack: [...session.undoStack, session.overlay],
});

export const applyLabel = (
  session: EditSession,
  layer: Layer,
  anchor: number,
  focus: number,
  label: string,
): EditSession =>
  pushEdit(
    session,
    withLayer(session.overlay, layer, labelSpan(session.overlay[layer], anchor, focus, label)),
  );

export const applyClear = (
  session: EditSession,
  layer: Layer,
  anchor: number,
  focus: number,
): EditSession =>
  pushEdit(
    session,
    withLayer(session.overlay, layer, clearSpan(session.overlay[layer], anchor, focus)),
  );

// Drop every span on both layers (one undoable step).
export const applyClearAll = (session: EditSession): EditSession =>
  pushEdit(session, { srl: [], er: [] });

// Restore the overlay exactly as it was before the last edit; no-op when
// nothing has been edited.
export const applyUndo = (session: EditSession): EditSession => {
  if (session.undoStack.length === 0) return session;
  return {
    ...session,
    overlay: session.undoStack[session.undoStack.length - 1],
    undoStack: session.undoStack.slice(0, -1),
  };
};

export const serializeSession = (session: EditSession): { srl_tags: string[]; er_tags: string[] } => {
  const length = session.task.tokens.length;
  return {
    srl_tags: spansToBio(session.overlay.srl, length, SRL_SCHEME),
    er_tags: spansToBio(session.overlay.er, length, ER_SCHEME),
  };
};

// ---------------------------
// Token selection
// ---------------------------
// A selection is a contiguous token range, stored as anchor/focus indices in
// either order. Because only indices inside the sentence are ever produced,
// every selection is labelable by construction.

export type Selection = {
  anchor: number;
  focus: number;
};

export const singleToken = (index: number): Selection => ({ anchor: index, focus: index });

export const extendTo = (selection: Selection | null, index: number): Selection =>
  selection === null ? singleToken(index) : { anchor: selection.anchor, focus: index };

// Arrow-key movement: plain movement collapses to the new focus, shift
// extends from the existing anchor. Clamped to the sentence.
export const moveFocus = (
  selection: Selection | null,
  delta: number,
  length: number,
  extend: boolean,
): Selection => {
  if (length < 1) return singleToken(0);
  const from = selection === null ? (delta > 0 ? -1 : length) : selection.focus;
  const focus = Math.max(0, Math.min(length - 1, from + delta));
  if (extend && selection !== null) return { anchor: selection.anchor, focus };
  return singleToken(focus);
};

export const selectionRange = (selection: Selection): { start: number; end: number } => ({
  start: Math.min(selection.anchor, selection.focus),
  end: Math.max(selection.anchor, selection.focus),
});

export const inSelection = (selection: Selection | null, index: number): boolean => {
  if (selection === null) return false;
  const { start, end } = selectionRange(selection);
  return start <= index && index <= end;
};
