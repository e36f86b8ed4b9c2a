/**
 * Conformance against the Python runtime: frames the console composes must
 * decode and validate server-side, and the view's tile lifecycle must mirror
 * the recorded proactive-communication decisions exactly.
 */
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { encodeFrame, FrameComposer } from "../src/protocol";
import { replayTrace } from "../src/viewstate";

const REPO = join(__dirname, "..", "..");

function python(code: string, input = ""): string {
  return execFileSync("python3", ["-c", code], {
    input,
    encoding: "utf-8",
    cwd: REPO,
  });
}

function runScenario(name: string, ticks: number, dir: string): string[] {
  const trace = join(dir, `${name}.jsonl`);
  execFileSync(
    "python3",
    ["-m", "sailkit.cli", "run",
     join(REPO, "src", "sailkit", "data", "scenarios", `${name}.scenario.json`),
     "--ticks", String(ticks), "--trace", trace],
    { encoding: "utf-8" },
  );
  return readFileSync(trace, "utf-8").split("\n");
}

let workdir: string;

beforeAll(() => {
  workdir = mkdtempSync(join(tmpdir(), "console-conformance-"));
});

describe("walkthrough frames validate server-side", () => {
  it("query, request, propose, accept, reject, cancel all decode", () => {
    const composer = new FrameComposer("Hum1", "military_ont");
    const wa = {
      wa_id: "wa-nofly-ui",
      kind: "prohibition" as const,
      debtor: "UAV1",
      creditor: "Hum1",
      antecedent: { always: true },
      consequent: { action: "FlyTo", where: { area: "Village" } },
      deadline_ticks: null,
    };
    const proposal = composer.proposeWa("UAV1", wa, "cnv-ui1");
    const frames = [
      composer.queryVehicles("swarm", "cnv-ui1"),
      composer.request("UAV1", { action: "FlyTo", to: [44, 34] }, "cnv-ui1"),
      proposal,
      composer.accept(
        { ...proposal, Sender: "UAV1", Receiver: "Hum1" },
        "wa-nofly-ui",
      ),
      composer.reject(
        { ...proposal, Sender: "UAV1", Receiver: "Hum1" },
        "wa-nofly-ui",
        "operator declined",
      ),
      composer.cancelWa("UAV1", "wa-nofly-ui", "cnv-ui1"),
      composer.subscribe("swarm", "HostileContact", "cnv-ui2"),
    ];
    const payload = frames.map((f) => encodeFrame(f)).join("\n");
    const report = python(
      `
import sys, json
sys.path.insert(0, "src")
from sailkit.hatcl import decode_message, validate_message
ok = 0
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    msg = decode_message(line)
    validate_message(msg)
    ok += 1
print(ok)
`,
      payload,
    );
    expect(Number(report.trim())).toBe(frames.length);
  });

  it("frames are accepted end-to-end by the live runtime", () => {
    const composer = new FrameComposer("Hum1", "military_ont");
    const frames = [
      composer.queryVehicles("swarm", "cnv-ui1"),
      composer.request("UAV1", { action: "FlyTo", to: [44, 34] }, "cnv-ui1"),
    ];
    const report = python(
      `
import sys, json
sys.path.insert(0, "src")
from sailkit.hatcl import decode_message
from sailkit.scenario import build_runtime, load_scenario, data_path
bus = build_runtime(load_scenario(data_path("scenarios", "nofly.scenario.json")))
for line in sys.stdin:
    line = line.strip()
    if line:
        bus.enqueue_external(decode_message(line))
bus.run_until(3)
replies = [r["wire"] for r in bus.trace.messages()
           if r["wire"]["Receiver"] == "Hum1"]
print(json.dumps(replies))
`,
      frames.map((f) => encodeFrame(f)).join("\n"),
    );
    const replies = JSON.parse(report) as Array<Record<string, unknown>>;
    const inReplyTo = new Set(replies.map((r) => r["In-reply-to"]));
    for (const frame of frames) {
      expect(inReplyTo.has(frame["Message-ID"])).toBe(true);
    }
  });
});

describe("tile lifecycle mirrors recorded decisions", () => {
  it("open/close events are a bijection with tile deliveries and retractions", () => {
    const lines = runScenario("hostile", 130, workdir);
    const { events } = replayTrace(lines);

    const expected: Array<{ action: string; topicId: string; tick: number }> = [];
    const open = new Set<string>();
    for (const line of lines) {
      if (!line.trim()) continue;
      const record = JSON.parse(line);
      if (record.record !== "decision") continue;
      if (record.kind === "deliver" && record.modality.includes("tile") &&
          !open.has(record.topic_id)) {
        open.add(record.topic_id);
        expected.push({ action: "open", topicId: record.topic_id, tick: record.tick });
      }
      if (record.kind === "retract" && open.has(record.topic_id)) {
        open.delete(record.topic_id);
        expected.push({ action: "close", topicId: record.topic_id, tick: record.tick });
      }
    }
    expect(events).toEqual(expected);
    expect(events.filter((e) => e.action === "open").length).toBeGreaterThan(0);
    expect(events.filter((e) => e.action === "close").length).toBeGreaterThan(0);
  });

  it("calm-trace replay renders zero tiles at every step", () => {
    const lines = runScenario("calm", 500, workdir);
    // an empty event list means no tile ever opened, so every intermediate
    // state had zero tiles
    const full = replayTrace(lines);
    expect(full.events).toHaveLength(0);
    expect(full.state.tiles).toHaveLength(0);
    expect(full.state.calm).toBe(true);
  });
});
