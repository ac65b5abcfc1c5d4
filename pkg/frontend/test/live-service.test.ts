// End-to-end against a real service process: generate a corpus, start the
// server on a scratch run directory, and drive it exactly the way the UI
// does — lease a batch, edit spans, serialize, submit. The bulk case pushes
// 1000 randomized edit sequences through the server's own validator; every
// accepted receipt is the server agreeing with the client's BIO.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { isApiError, makeApi, type Api, type LabelSubmission, type SubmitReceipt } from "../src/api";
import { SRL_SCHEME, ER_SCHEME, schemeFor, validateBio, type Layer } from "../src/bio";
import { applyClear, applyLabel, applyUndo, beginSession, serializeSession } from "../src/state";
import { mulberry32, pick, randInt } from "./rng";

const FRONTEND_ROOT = fileURLToPath(new URL("..", import.meta.url));
const BATCH = 8;

const sleep = (ms: number): Promise<void> => new Promise((resolve) => setTimeout(resolve, ms));

let work = "";
let proc: ChildProcess | null = null;
let base = "";
let api: Api;
let stdoutBuf = "";
let stderrBuf = "";

const serverLog = (): string => `--- server stdout ---\n${stdoutBuf}\n--- server stderr ---\n${stderrBuf}`;

beforeAll(async () => {
  work = mkdtempSync(join(tmpdir(), "webui-e2e-"));
  const corpus = join(work, "corpus.tsv");
  const gen = spawnSync("mtal", ["datagen", "--count", "1500", "--seed", "7", "--out", corpus], {
    encoding: "utf8",
  });
  if (gen.status !== 0) {
    throw new Error(`datagen failed (${gen.status}): ${gen.stderr ?? gen.error}`);
  }

  if (!existsSync(join(FRONTEND_ROOT, "dist", "index.html"))) {
    const built = spawnSync("node", ["build.mjs"], { cwd: FRONTEND_ROOT, encoding: "utf8" });
    if (built.status !== 0) throw new Error(`bundle build failed: ${built.stderr}`);
  }

  const port = 8900 + Math.floor(Math.random() * 800);
  base = `http://127.0.0.1:${port}`;
  api = makeApi(base);

  // Small dimensions and a short schedule: the flows under test care about
  // lease/submit bookkeeping and BIO validation, not tagging quality.
  proc = spawn(
    "mtal",
    [
      "serve", "--data", corpus, "--port", String(port), "--seed", "11",
      "--seed-fraction", "0.05", "--batch", String(BATCH),
      "--word-dim", "8", "--char-dim", "8", "--predicate-dim", "8",
      "--char-emb-dim", "6", "--hidden-units", "12", "--encoder-layers", "1",
      "--epochs", "2", "--patience", "1", "--no-pretrain-embeddings",
      "--out", join(work, "runs"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  proc.stdout!.on("data", (d) => { stdoutBuf += String(d); });
  proc.stderr!.on("data", (d) => { stderrBuf += String(d); });

  const deadline = Date.now() + 120_000;
  let lastErr: unknown = null;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`server exited early (code ${proc.exitCode})\n${serverLog()}`);
    }
    try {
      const m = await api.fetchMetrics();
      if (m.model_available) break;
    } catch (e) {
      lastErr = e;
    }
    if (Date.now() > deadline) {
      throw new Error(`server not ready within 120s: ${String(lastErr)}\n${serverLog()}`);
    }
    await sleep(500);
  }
}, 240_000);

afterAll(async () => {
  if (proc && proc.exitCode === null) {
    const exited = new Promise<void>((resolve) => proc!.once("exit", () => resolve()));
    proc.kill("SIGTERM");
    await Promise.race([exited, sleep(10_000)]);
    if (proc.exitCode === null) proc.kill("SIGKILL");
  }
  if (work) rmSync(work, { recursive: true, force: true });
}, 60_000);

describe("live service", () => {
  const submitted: LabelSubmission[] = [];

  it("serves the built UI bundle alongside the API", async () => {
    const page = await fetch(`${base}/`);
    expect(page.ok).toBe(true);
    const html = await page.text();
    expect(html).toContain('id="annotator"');
    expect(html).toContain("app.js");
    expect((await fetch(`${base}/app.js`)).ok).toBe(true);
    expect((await fetch(`${base}/styles.css`)).ok).toBe(true);
  }, 60_000);

  it("labels a leased batch through span edits and raises the labeled count by the batch size", async () => {
    const before = await api.fetchMetrics();
    const batch = await api.fetchBatch();
    expect(batch).toHaveLength(BATCH);

    let last: SubmitReceipt | null = null;
    for (const task of batch) {
      // Suggestions must already satisfy the validator the server will
      // apply to them on the way back in.
      expect(validateBio(task.pre.srl_tags, SRL_SCHEME)).toBeNull();
      expect(validateBio(task.pre.er_tags, ER_SCHEME)).toBeNull();

      let session = beginSession(task);
      const lastTok = task.tokens.length - 1;
      session = applyLabel(session, "srl", 0, Math.min(1, lastTok), "AGENT");
      session = applyLabel(session, "er", lastTok, lastTok, "PERSON");
      const tags = serializeSession(session);
      const payload: LabelSubmission = {
        sentence_id: task.sentence_id,
        srl_tags: tags.srl_tags,
        er_tags: tags.er_tags,
        annotator: "e2e",
      };
      const receipt = await api.submitLabels(payload);
      expect(receipt.status).toBe("accepted");
      submitted.push(payload);
      last = receipt;
    }

    expect(last?.labeled_size).toBe(before.labeled_size + BATCH);
    const after = await api.fetchMetrics();
    expect(after.labeled_size).toBe(before.labeled_size + BATCH);
    expect(after.inflight_size).toBe(0);
  }, 120_000);

  it("rejects a second submission of an already-submitted sentence with 409", async () => {
    expect(submitted.length).toBeGreaterThan(0);
    let status = 0;
    let detail = "";
    try {
      await api.submitLabels(submitted[0]);
    } catch (e) {
      if (isApiError(e)) {
        status = e.status;
        detail = e.detail;
      }
    }
    expect(status).toBe(409);
    expect(detail).toContain("not in flight");
  }, 60_000);

  it("publishes a new snapshot on retrain and extends the history", async () => {
    const before = await api.fetchMetrics();
    const out = await api.retrain();
    expect(out.snapshot_version).toBe(before.snapshot_version + 1);
    const after = await api.fetchMetrics();
    expect(after.snapshot_version).toBe(out.snapshot_version);
    expect(after.history).toHaveLength(before.history.length + 1);
    expect(after.model_available).toBe(true);
  }, 240_000);

  it("submits 1000 randomized span-edit serializations that all pass server validation", async () => {
    const rng = mulberry32(0xe2e5eed);
    const before = await api.fetchMetrics();
    const seen = new Set<string>();
    const rounds = 20;
    const lease = 50;
    let accepted = 0;

    for (let round = 0; round < rounds; round++) {
      const batch = await api.fetchBatch("random", lease);
      expect(batch).toHaveLength(lease);
      for (const task of batch) {
        expect(seen.has(task.sentence_id)).toBe(false);
        seen.add(task.sentence_id);

        let session = beginSession(task);
        const len = task.tokens.length;
        const ops = 1 + randInt(rng, 10);
        for (let o = 0; o < ops; o++) {
          const layer: Layer = rng() < 0.5 ? "srl" : "er";
          const a = randInt(rng, len);
          const b = randInt(rng, len);
          const r = rng();
          if (r < 0.75) {
            session = applyLabel(session, layer, a, b, pick(rng, schemeFor(layer).labels));
          } else if (r < 0.9) {
            session = applyClear(session, layer, a, b);
          } else {
            session = applyUndo(session);
          }
        }

        const tags = serializeSession(session);
        expect(validateBio(tags.srl_tags, SRL_SCHEME)).toBeNull();
        expect(validateBio(tags.er_tags, ER_SCHEME)).toBeNull();
        const receipt = await api.submitLabels({
          sentence_id: task.sentence_id,
          srl_tags: tags.srl_tags,
          er_tags: tags.er_tags,
          annotator: "e2e",
        });
        expect(receipt.status).toBe("accepted");
        accepted++;
      }
    }

    expect(accepted).toBe(1000);
    const after = await api.fetchMetrics();
    expect(after.labeled_size).toBe(before.labeled_size + 1000);
    expect(after.inflight_size).toBe(0);
  }, 420_000);
});
