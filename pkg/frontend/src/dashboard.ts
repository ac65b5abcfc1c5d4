// ---------------------------
// Progress dashboard
// ---------------------------
// Labeled/pool counts, dev and test scores for the current snapshot, a
// learning curve over the retrain history, and the retrain trigger. Refreshed
// from /api/metrics after every accepted submission and after each retrain,
// so the curve grows without a reload.

import { isApiError, type Api, type HistoryPoint, type Metrics } from "./api";

const fmtPct = (v: number): string => `${(100 * v).toFixed(1)}%`;

// ---------------------------
// Learning curve
// ---------------------------
// Dev and test F1 against labeled-set size, drawn on a fixed 0..1 F1 axis so
// early noise is not mistaken for progress.

const CURVE_W = 360;
const CURVE_H = 170;
const PAD_L = 34;
const PAD_R = 12;
const PAD_T = 10;
const PAD_B = 22;

type CurveSeries = {
  name: string;
  cls: string;
  points: { size: number; f1: number; version: number }[];
};

const seriesFrom = (history: HistoryPoint[], key: "dev_f1" | "test_f1", name: string, cls: string): CurveSeries => ({
  name,
  cls,
  points: history
    .filter((h) => h[key] !== null)
    .map((h) => ({ size: h.labeled_size, f1: h[key] as number, version: h.version })),
});

const curveSvg = (history: HistoryPoint[]): string => {
  const series = [
    seriesFrom(history, "dev_f1", "dev", "curve-dev"),
    seriesFrom(history, "test_f1", "test", "curve-test"),
  ].filter((s) => s.points.length > 0);
  if (series.length === 0) {
    return `<p class="placeholder">no evaluation points yet</p>`;
  }

  const sizes = series.flatMap((s) => s.points.map((p) => p.size));
  const xMin = Math.min(...sizes);
  const xMax = Math.max(...sizes);
  const xOf = (size: number): number =>
    xMax === xMin
      ? PAD_L + (CURVE_W - PAD_L - PAD_R) / 2
      : PAD_L + ((size - xMin) * (CURVE_W - PAD_L - PAD_R)) / (xMax - xMin);
  const yOf = (f1: number): number => PAD_T + (1 - f1) * (CURVE_H - PAD_T - PAD_B);

  const axis = `
    <line class="axis" x1="${PAD_L}" y1="${yOf(1)}" x2="${PAD_L}" y2="${yOf(0)}" />
    <line class="axis" x1="${PAD_L}" y1="${yOf(0)}" x2="${CURVE_W - PAD_R}" y2="${yOf(0)}" />
    <text class="axis-label" x="${PAD_L - 4}" y="${yOf(1) + 4}" text-anchor="end">1.0</text>
    <text class="axis-label" x="${PAD_L - 4}" y="${yOf(0) + 4}" text-anchor="end">0.0</text>
    <text class="axis-label" x="${PAD_L}" y="${CURVE_H - 4}" text-anchor="start">${xMin}</text>
    <text class="axis-label" x="${CURVE_W - PAD_R}" y="${CURVE_H - 4}" text-anchor="end">${xMax} labeled</text>
  `;

  const drawn = series.map((s) => {
    const coords = s.points.map((p) => `${xOf(p.size).toFixed(1)},${yOf(p.f1).toFixed(1)}`);
    const dots = s.points
      .map(
        (p) => `<circle class="${s.cls}" cx="${xOf(p.size).toFixed(1)}" cy="${yOf(p.f1).toFixed(1)}" r="3">
          <title>${s.name} F1 ${p.f1.toFixed(3)} at ${p.size} labeled (snapshot v${p.version})</title>
        </circle>`,
      )
      .join("");
    return `<polyline class="${s.cls}" fill="none" points="${coords.join(" ")}" />${dots}`;
  });

  const legend = series
    .map(
      (s, i) =>
        `<circle class="${s.cls}" cx="${CURVE_W - PAD_R - 70 + i * 44}" cy="${PAD_T + 4}" r="3" />
         <text class="axis-label" x="${CURVE_W - PAD_R - 62 + i * 44}" y="${PAD_T + 8}">${s.name}</text>`,
    )
    .join("");

  return `<svg class="curve" viewBox="0 0 ${CURVE_W} ${CURVE_H}" role="img"
    aria-label="F1 against labeled-set size">${axis}${drawn.join("")}${legend}</svg>`;
};

// ---------------------------
// Panel
// ---------------------------

export const mountDashboard = (root: HTMLElement, api: Api) => {
  root.innerHTML = `
    <h2 class="panel-title">progress</h2>
    <dl class="counts"></dl>
    <div class="scores"></div>
    <div class="curve-box"></div>
    <div class="retrain-row">
      <button type="button" class="btn primary retrain-btn">retrain on labeled set</button>
      <span class="retrain-note"></span>
    </div>
  `;

  const counts = root.querySelector<HTMLElement>(".counts")!;
  const scores = root.querySelector<HTMLElement>(".scores")!;
  const curveBox = root.querySelector<HTMLElement>(".curve-box")!;
  const retrainBtn = root.querySelector<HTMLButtonElement>(".retrain-btn")!;
  const retrainNote = root.querySelector<HTMLElement>(".retrain-note")!;

  let metrics: Metrics | null = null;

  const scoreBlock = (name: string, s: { precision: number; recall: number; f1: number }): string => `
    <div class="score-block">
      <span class="score-name">${name}</span>
      <span>P ${fmtPct(s.precision)}</span>
      <span>R ${fmtPct(s.recall)}</span>
      <span class="score-f1">F1 ${fmtPct(s.f1)}</span>
    </div>
  `;

  const render = () => {
    if (!metrics) {
      counts.innerHTML = "";
      scores.innerHTML = `<p class="placeholder">loading metrics&hellip;</p>`;
      curveBox.innerHTML = "";
      return;
    }
    counts.innerHTML = `
      <div><dt>labeled</dt><dd>${metrics.labeled_size}</dd></div>
      <div><dt>pool</dt><dd>${metrics.pool_size}</dd></div>
      <div><dt>in flight</dt><dd>${metrics.inflight_size}</dd></div>
      <div><dt>snapshot</dt><dd>v${metrics.snapshot_version}</dd></div>
    `;
    if (!metrics.model_available) {
      scores.innerHTML = `<p class="placeholder">no model yet — retrain to get a first snapshot</p>`;
      curveBox.innerHTML = "";
      return;
    }
    const blocks = [
      metrics.dev ? scoreBlock("dev", metrics.dev) : "",
      metrics.test ? scoreBlock("test", metrics.test) : "",
    ].join("");
    scores.innerHTML = blocks || `<p class="placeholder">no held-out split to score</p>`;
    curveBox.innerHTML = curveSvg(metrics.history);
  };

  const refresh = async (): Promise<void> => {
    try {
      metrics = await api.fetchMetrics();
      render();
    } catch (e) {
      scores.innerHTML = `<p class="placeholder">metrics unavailable${
        isApiError(e) ? `: ${e.detail}` : ""
      }</p>`;
    }
  };

  retrainBtn.addEventListener("click", () => {
    retrainBtn.disabled = true;
    retrainNote.textContent = "training…";
    api
      .retrain()
      .then((out) => {
        retrainNote.textContent = `snapshot v${out.snapshot_version} published`;
        return refresh();
      })
      .catch((e: unknown) => {
        retrainNote.textContent = isApiError(e) ? e.detail : "retrain failed — is the service up?";
      })
      .finally(() => {
        retrainBtn.disabled = false;
      });
  });

  void refresh();
  return { refresh };
};
