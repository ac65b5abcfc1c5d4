// ---------------------------
// Wire types
// ---------------------------
// Shapes the annotation service speaks. Field names follow the JSON payloads
// exactly; errors arrive as {"detail": reason} with a 4xx status.

export type PreAnnotation = {
  srl_tags: string[];
  srl_path_prob: number;
  er_tags: string[];
  er_confidence: number[];
  snapshot_version: number;
};

export type Task = {
  sentence_id: string;
  tokens: string[];
  predicate_index: number;
  pre: PreAnnotation;
  status: string;
};

export type LabelSubmission = {
  sentence_id: string;
  srl_tags: string[];
  er_tags: string[];
  annotator: string;
};

export type SubmitReceipt = {
  status: string;
  labeled_size: number;
};

export type ScoreTriple = {
  precision: number;
  recall: number;
  f1: number;
};

export type HistoryPoint = {
  version: number;
  labeled_size: number;
  dev_f1: number | null;
  test_f1: number | null;
};

export type Metrics = {
  labeled_size: number;
  pool_size: number;
  inflight_size: number;
  snapshot_version: number;
  model_available: boolean;
  history: HistoryPoint[];
  dev?: ScoreTriple;
  test?: ScoreTriple;
};

export type SentenceView = {
  sentence_id: string;
  tokens: string[];
  predicate_index: number;
  status: "pending" | "assigned" | "submitted";
  srl_tags?: string[];
  er_tags?: string[];
  pre?: PreAnnotation;
};

// ---------------------------
// HTTP client
// ---------------------------

export type ApiError = Error & { status: number; detail: string };

export const isApiError = (e: unknown): e is ApiError =>
  e instanceof Error && typeof (e as Partial<ApiError>).status === "number";

const request = async <T>(base: string, path: string, init?: RequestInit): Promise<T> => {
  const res = await fetch(base + path, init);
  if (!res.ok) {
    const txt = await res.text();
    let detail = txt;
    try {
      detail = JSON.parse(txt).detail ?? txt;
    } catch {
      // non-JSON error body: keep the raw text
    }
    const err = new Error(`${res.status}: ${detail}`) as ApiError;
    err.status = res.status;
    err.detail = detail;
    throw err;
  }
  return res.json() as Promise<T>;
};

// `base` is empty in the browser (same origin) and an absolute URL in tests.
export const makeApi = (base = "") => ({
  fetchBatch: (strategy?: string, size?: number): Promise<Task[]> => {
    const params = new URLSearchParams();
    if (strategy !== undefined) params.set("strategy", strategy);
    if (size !== undefined) params.set("size", String(size));
    const qs = params.toString();
    return request(base, `/api/batch${qs ? `?${qs}` : ""}`);
  },

  submitLabels: (payload: LabelSubmission): Promise<SubmitReceipt> =>
    request(base, "/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }),

  retrain: (): Promise<{ snapshot_version: number }> =>
    request(base, "/api/retrain", { method: "POST" }),

  fetchMetrics: (): Promise<Metrics> => request(base, "/api/metrics"),

  fetchSentence: (sentenceId: string): Promise<SentenceView> =>
    request(base, `/api/sentence/${encodeURIComponent(sentenceId)}`),
});

export type Api = ReturnType<typeof makeApi>;
