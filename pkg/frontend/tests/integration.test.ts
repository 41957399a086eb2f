/** End-to-end against the real service: build a bundle with the CLI, serve
 * it, drive a Session over real HTTP, and re-load the exported OBJ with the
 * primary loader. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { HttpTransport } from "../src/api.js";
import { buildObj } from "../src/objexport.js";
import { Session } from "../src/session.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

const FAMILY_CONFIG = {
  seed: 417,
  ring_segments: 6,
  axial_segments: 3,
  sphere_rings: 4,
  sample_count: 16,
  texture_size: 8,
};

let server: ChildProcess | null = null;
let workDir: string;

async function waitForServer(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/meta`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "bipar-e2e-"));
  const cfgPath = join(workDir, "config.json");
  writeFileSync(cfgPath, JSON.stringify(FAMILY_CONFIG));
  const run = (args: string[]) => execFileSync("bipar", args, { encoding: "utf-8" });
  run(["synth", "gen", "--config", cfgPath, "--out", join(workDir, "data")]);
  run([
    "model", "fit",
    "--data", join(workDir, "data"),
    "--shape-k", "8",
    "--tex-k", "4",
    "--out", join(workDir, "bundle"),
  ]);
  server = spawn("bipar", ["serve", "--bundle", join(workDir, "bundle"), "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForServer(30_000);
}, 120_000);

afterAll(() => {
  server?.kill();
});

describe("explorer against the live service", () => {
  it("connects, evaluates zeros, and the vertex count matches /meta", async () => {
    const session = new Session(new HttpTransport(BASE));
    const meta = await session.connect();
    expect(meta.pose_dim).toBe(69);
    expect(meta.joint_names).toHaveLength(23);

    const rendered: number[] = [];
    session.onRender = (resp) => rendered.push(resp.vertices.length / 3);
    session.scheduleEval();
    await new Promise((r) => setTimeout(r, 400));
    while (session.requestInFlight) {
      await new Promise((r) => setTimeout(r, 100));
    }
    expect(rendered).toHaveLength(1);
    expect(rendered[0]).toBe(meta.vertex_count);
  }, 30_000);

  it("exported OBJ re-loads under the primary loader", async () => {
    const session = new Session(new HttpTransport(BASE));
    const meta = await session.connect();
    session.setShapeSlider(0, 0.8);
    session.setJointAngle(3, 1, 0.4);
    await new Promise((r) => setTimeout(r, 400));
    while (session.requestInFlight) {
      await new Promise((r) => setTimeout(r, 100));
    }
    expect(session.lastResponse).not.toBeNull();

    const objPath = join(workDir, "exported.obj");
    writeFileSync(objPath, buildObj(session.lastResponse!));
    const script = [
      "import sys",
      "from bipar.mesh import load_mesh",
      "m = load_mesh(sys.argv[1])",
      "print(m.vertex_count, m.face_count)",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script, objPath], { encoding: "utf-8" });
    const [nv, nf] = out.trim().split(" ").map(Number);
    expect(nv).toBe(meta.vertex_count);
    expect(nf).toBe(meta.face_count);
  }, 30_000);
});
