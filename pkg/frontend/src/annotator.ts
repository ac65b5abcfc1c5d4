// ---------------------------
// Annotation view
// ---------------------------
// Renders one assigned sentence as a token table with a span row per layer,
// and turns clicks/drags/keys into the pure edit operations in state.ts.
// The view owns the task queue: it leases a batch, walks it one sentence at
// a time, and fetches the next batch when the queue drains. The service
// re-delivers unfinished leases, so reloading the page resumes where the
// annotator left off.
//
// Keyboard-first: digits label the current selection in the active layer,
// tab switches layer, arrows move/extend the selection, 0 unlabels,
// z undoes, enter submits.

import { isApiError, type Api, type LabelSubmission, type SubmitReceipt, type Task } from "./api";
import { ER_SCHEME, SRL_SCHEME, schemeFor, spanAt, validateBio, type Layer } from "./bio";
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
  type EditSession,
  type Selection,
} from "./state";

export type AnnotatorHooks = {
  annotator?: string;
  onSubmitted?: (receipt: SubmitReceipt) => void;
};

type BannerKind = "error" | "offline" | "info";

type BannerAction = {
  label: string;
  onClick: () => void;
};

const escapeHtml = (s: string): string =>
  s.replace(/[&<>"']/g, (c) => {
    const map: Record<string, string> = {
      "&": "&amp;",
      "<": "&lt;",
      ">": "&gt;",
      '"': "&quot;",
      "'": "&#39;",
    };
    return map[c] ?? c;
  });

export const mountAnnotator = (root: HTMLElement, api: Api, hooks: AnnotatorHooks = {}) => {
  const annotator = hooks.annotator ?? "anonymous";

  // Working state. `queue` holds the remaining tasks of the current lease;
  // the session always wraps queue[0]. `pending` holds a submission captured
  // before a network failure, waiting for an explicit retry.
  let queue: Task[] = [];
  let batchTotal = 0;
  let session: EditSession | null = null;
  let selection: Selection | null = null;
  let activeLayer: Layer = "srl";
  let dragging = false;
  let pending: LabelSubmission[] = [];
  let busy = false;
  let exhausted = false;

  root.innerHTML = `
    <div class="annotator-head">
      <span class="sentence-ref"></span>
      <span class="batch-note"></span>
      <span class="suggestion-note"></span>
    </div>
    <div class="banner hidden"><span class="banner-text"></span></div>
    <div class="sentence-area"></div>
    <div class="palette"></div>
    <div class="controls">
      <button type="button" class="btn undo-btn">undo (z)</button>
      <button type="button" class="btn clear-btn">unlabel selection (0)</button>
      <button type="button" class="btn clear-all-btn">clear all</button>
      <button type="button" class="btn primary submit-btn">submit + next (enter)</button>
    </div>
    <p class="help">
      drag or shift-click tokens to select &middot; digits label the active layer
      &middot; tab switches layer &middot; &larr;/&rarr; move, shift extends
      &middot; 0 unlabels &middot; z undoes &middot; enter submits
    </p>
  `;

  const sentenceRef = root.querySelector<HTMLElement>(".sentence-ref")!;
  const batchNote = root.querySelector<HTMLElement>(".batch-note")!;
  const suggestionNote = root.querySelector<HTMLElement>(".suggestion-note")!;
  const banner = root.querySelector<HTMLElement>(".banner")!;
  const bannerText = banner.querySelector<HTMLElement>(".banner-text")!;
  const sentenceArea = root.querySelector<HTMLElement>(".sentence-area")!;
  const palette = root.querySelector<HTMLElement>(".palette")!;
  const undoBtn = root.querySelector<HTMLButtonElement>(".undo-btn")!;
  const clearBtn = root.querySelector<HTMLButtonElement>(".clear-btn")!;
  const clearAllBtn = root.querySelector<HTMLButtonElement>(".clear-all-btn")!;
  const submitBtn = root.querySelector<HTMLButtonElement>(".submit-btn")!;

  // ---------------------------
  // Banner
  // ---------------------------
  // Lives outside the re-rendered regions so a rejection message survives
  // any amount of further editing, and edits survive the rejection.

  const hideBanner = () => {
    banner.className = "banner hidden";
    bannerText.textContent = "";
    banner.querySelector("button")?.remove();
  };

  const showBanner = (kind: BannerKind, text: string, action: BannerAction | null) => {
    banner.className = `banner banner-${kind}`;
    bannerText.textContent = text;
    banner.querySelector("button")?.remove();
    if (action) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.className = "btn banner-btn";
      btn.textContent = action.label;
      btn.addEventListener("click", action.onClick);
      banner.appendChild(btn);
    }
  };

  // ---------------------------
  // Rendering
  // ---------------------------

  const layerRow = (layer: Layer): string => {
    const s = session!;
    const scheme = schemeFor(layer);
    const spans = s.overlay[layer];
    const cells = s.task.tokens.map((_tok, i) => {
      const span = spanAt(spans, i);
      const classes = ["cell"];
      let text = "";
      let title = "";
      if (span) {
        classes.push(`lbl-${scheme.codes[scheme.labels.indexOf(span.label)]}`);
        if (span.start === i) {
          classes.push("span-start");
          text = escapeHtml(span.label);
        }
        title = ` title="${escapeHtml(span.label)}"`;
      }
      if (layer === activeLayer && inSelection(selection, i)) classes.push("selected");
      return `<td class="${classes.join(" ")}" data-i="${i}"${title}>${text}</td>`;
    });
    const active = layer === activeLayer ? " active-layer" : "";
    const name = layer === "srl" ? "roles" : "entities";
    return `<tr class="layer-row${active}" data-layer="${layer}">
      <th class="row-head" data-layer="${layer}">${name}</th>${cells.join("")}</tr>`;
  };

  const renderSentence = () => {
    if (!session) {
      sentenceArea.innerHTML = exhausted
        ? ""
        : `<p class="placeholder">${busy ? "fetching a batch&hellip;" : "no task loaded"}</p>`;
      return;
    }
    const task = session.task;
    const tokenCells = task.tokens.map((tok, i) => {
      const classes = ["token"];
      if (i === task.predicate_index) classes.push("predicate");
      if (inSelection(selection, i)) classes.push("selected");
      if (selection !== null && selection.focus === i) classes.push("focus");
      const title = i === task.predicate_index ? ' title="predicate"' : "";
      return `<td class="${classes.join(" ")}" data-i="${i}"${title}>${escapeHtml(tok)}</td>`;
    });
    sentenceArea.innerHTML = `
      <div class="table-scroll"><table class="annotator-table">
        <tr class="token-row"><th class="row-head">tokens</th>${tokenCells.join("")}</tr>
        ${layerRow("srl")}
        ${layerRow("er")}
      </table></div>
    `;
  };

  const renderHead = () => {
    if (!session) {
      sentenceRef.textContent = "";
      batchNote.textContent = "";
      suggestionNote.textContent = "";
      return;
    }
    const task = session.task;
    sentenceRef.textContent = task.sentence_id;
    batchNote.textContent = `task ${batchTotal - queue.length + 1} of ${batchTotal}`;
    suggestionNote.textContent = `suggestions from model v${task.pre.snapshot_version}`;
    suggestionNote.title = `role path probability ${task.pre.srl_path_prob.toFixed(3)}`;
  };

  const renderPalette = () => {
    if (!session) {
      palette.innerHTML = "";
      return;
    }
    const scheme = schemeFor(activeLayer);
    const buttons = scheme.labels.map((label, i) => {
      const code = scheme.codes[i];
      return `<button type="button" class="btn label-btn lbl-${code}" data-label="${escapeHtml(label)}">
        <span class="key-hint">${i + 1}</span>${escapeHtml(label)}</button>`;
    });
    const layerName = activeLayer === "srl" ? "roles" : "entities";
    palette.innerHTML = `<span class="palette-title">${layerName}:</span>${buttons.join("")}`;
  };

  const renderControls = () => {
    undoBtn.disabled = busy || !session || session.undoStack.length === 0;
    clearBtn.disabled = busy || !session || selection === null;
    clearAllBtn.disabled = busy || !session;
    submitBtn.disabled = busy || (pending.length === 0 && !session);
    submitBtn.textContent = pending.length > 0 ? "retry submission" : "submit + next (enter)";
  };

  const render = () => {
    renderHead();
    renderSentence();
    renderPalette();
    renderControls();
  };

  // ---------------------------
  // Task flow
  // ---------------------------

  const advance = () => {
    queue.shift();
    selection = null;
    if (queue.length > 0) {
      session = beginSession(queue[0]);
      render();
    } else {
      session = null;
      render();
      void fetchBatch();
    }
  };

  const fetchBatch = async () => {
    if (exhausted || busy) return;
    busy = true;
    render();
    try {
      const batch = await api.fetchBatch();
      queue = batch;
      batchTotal = batch.length;
      session = batch.length > 0 ? beginSession(batch[0]) : null;
      selection = null;
      hideBanner();
    } catch (e) {
      if (isApiError(e) && e.status === 409 && e.detail.includes("pool exhausted")) {
        exhausted = true;
        showBanner("info", "every pool sentence has been labeled — nothing left to fetch", null);
      } else if (isApiError(e)) {
        showBanner("error", e.detail, { label: "try again", onClick: () => void fetchBatch() });
      } else {
        showBanner("offline", "cannot reach the service", {
          label: "retry",
          onClick: () => void fetchBatch(),
        });
      }
    } finally {
      busy = false;
      render();
    }
  };

  const flushPending = async () => {
    if (busy || pending.length === 0) return;
    busy = true;
    render();
    try {
      while (pending.length > 0) {
        try {
          const receipt = await api.submitLabels(pending[0]);
          pending.shift();
          hideBanner();
          hooks.onSubmitted?.(receipt);
          advance();
        } catch (e) {
          if (isApiError(e) && e.status === 409) {
            // An earlier attempt landed but its response never arrived;
            // the lease is gone, so the work is done.
            pending.shift();
            hideBanner();
            advance();
          } else if (isApiError(e)) {
            showBanner("error", e.detail, null);
            return;
          } else {
            showBanner("offline", "still unreachable — submission held locally", {
              label: "retry",
              onClick: () => void flushPending(),
            });
            return;
          }
        }
      }
    } finally {
      busy = false;
      render();
    }
  };

  const submitCurrent = async () => {
    if (busy) return;
    if (pending.length > 0) {
      await flushPending();
      return;
    }
    if (!session) return;
    const tags = serializeSession(session);
    const problem =
      validateBio(tags.srl_tags, SRL_SCHEME) ?? validateBio(tags.er_tags, ER_SCHEME);
    if (problem) {
      // Unreachable through the span ops; kept so a future bug surfaces
      // client-side instead of as a confusing rejection.
      showBanner("error", problem, null);
      return;
    }
    const payload: LabelSubmission = {
      sentence_id: session.task.sentence_id,
      srl_tags: tags.srl_tags,
      er_tags: tags.er_tags,
      annotator,
    };
    busy = true;
    render();
    try {
      const receipt = await api.submitLabels(payload);
      hideBanner();
      hooks.onSubmitted?.(receipt);
      advance();
    } catch (e) {
      if (isApiError(e)) {
        // The server refused; its reason goes on screen and every edit stays.
        showBanner("error", e.detail, null);
      } else {
        pending = [payload];
        showBanner("offline", "cannot reach the service — submission held locally", {
          label: "retry",
          onClick: () => void flushPending(),
        });
      }
    } finally {
      busy = false;
      render();
    }
  };

  // ---------------------------
  // Mouse interaction
  // ---------------------------
  // Selection is a token range identified by anchor/focus indices, so only
  // contiguous, in-sentence ranges can ever exist.

  const cellIndex = (target: EventTarget | null): number | null => {
    if (!(target instanceof HTMLElement)) return null;
    const td = target.closest("td[data-i]");
    if (!(td instanceof HTMLElement)) return null;
    return Number.parseInt(td.dataset.i ?? "", 10);
  };

  const cellLayer = (target: EventTarget | null): Layer | null => {
    if (!(target instanceof HTMLElement)) return null;
    const row = target.closest("[data-layer]");
    const layer = row instanceof HTMLElement ? row.dataset.layer : undefined;
    return layer === "srl" || layer === "er" ? layer : null;
  };

  sentenceArea.addEventListener("mousedown", (e) => {
    if (!session) return;
    const i = cellIndex(e.target);
    const layer = cellLayer(e.target);
    if (layer !== null && layer !== activeLayer) {
      activeLayer = layer;
    }
    if (i === null) {
      if (layer !== null) render();
      return;
    }
    e.preventDefault();
    selection = e.shiftKey ? extendTo(selection, i) : singleToken(i);
    dragging = true;
    render();
  });

  sentenceArea.addEventListener("mouseover", (e) => {
    if (!dragging || !session) return;
    const i = cellIndex(e.target);
    if (i === null) return;
    if (selection !== null && selection.focus === i) return;
    selection = extendTo(selection, i);
    render();
  });

  document.addEventListener("mouseup", () => {
    dragging = false;
  });

  // Double-click selects the whole span under the cursor in its layer.
  sentenceArea.addEventListener("dblclick", (e) => {
    if (!session) return;
    const i = cellIndex(e.target);
    const layer = cellLayer(e.target) ?? activeLayer;
    if (i === null) return;
    const span = spanAt(session.overlay[layer], i);
    if (span === null) return;
    activeLayer = layer;
    selection = { anchor: span.start, focus: span.end };
    render();
  });

  // ---------------------------
  // Buttons and keys
  // ---------------------------

  palette.addEventListener("click", (e) => {
    if (!session || !(e.target instanceof HTMLElement)) return;
    const btn = e.target.closest("button[data-label]");
    if (!(btn instanceof HTMLElement) || selection === null) return;
    session = applyLabel(session, activeLayer, selection.anchor, selection.focus, btn.dataset.label ?? "");
    render();
  });

  undoBtn.addEventListener("click", () => {
    if (!session) return;
    session = applyUndo(session);
    render();
  });

  clearBtn.addEventListener("click", () => {
    if (!session || selection === null) return;
    session = applyClear(session, activeLayer, selection.anchor, selection.focus);
    render();
  });

  clearAllBtn.addEventListener("click", () => {
    if (!session) return;
    session = applyClearAll(session);
    render();
  });

  submitBtn.addEventListener("click", () => void submitCurrent());

  const onKeyDown = (e: KeyboardEvent) => {
    if (e.target instanceof HTMLElement && ["INPUT", "TEXTAREA", "SELECT"].includes(e.target.tagName)) {
      return;
    }
    if (e.key === "Enter") {
      e.preventDefault();
      void submitCurrent();
      return;
    }
    if (!session) return;
    const length = session.task.tokens.length;
    if (e.key === "Tab") {
      e.preventDefault();
      activeLayer = activeLayer === "srl" ? "er" : "srl";
      render();
      return;
    }
    if (e.key === "Escape") {
      selection = null;
      render();
      return;
    }
    if (e.key.toLowerCase() === "z" && !e.altKey) {
      e.preventDefault();
      session = applyUndo(session);
      render();
      return;
    }
    if (e.key === "ArrowLeft" || e.key === "ArrowRight") {
      e.preventDefault();
      const delta = e.key === "ArrowLeft" ? -1 : 1;
      selection = moveFocus(selection, delta, length, e.shiftKey);
      render();
      return;
    }
    if (e.key === "Backspace" || e.key === "Delete" || e.key === "0") {
      if (selection !== null) {
        e.preventDefault();
        session = applyClear(session, activeLayer, selection.anchor, selection.focus);
        render();
      }
      return;
    }
    const digit = Number.parseInt(e.key, 10);
    if (!Number.isNaN(digit) && digit >= 1 && selection !== null) {
      const scheme = schemeFor(activeLayer);
      const label = scheme.labels[digit - 1];
      if (label !== undefined) {
        e.preventDefault();
        session = applyLabel(session, activeLayer, selection.anchor, selection.focus, label);
        render();
      }
    }
  };
  document.addEventListener("keydown", onKeyDown);

  render();
  void fetchBatch();

  return {
    refetch: () => void fetchBatch(),
    dispose: () => document.removeEventListener("keydown", onKeyDown),
  };
};
