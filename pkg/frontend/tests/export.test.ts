import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import type { EvalResponse } from "../src/api.js";
import { buildObj, decodeTexture } from "../src/objexport.js";

function sampleResponse(): EvalResponse {
  return {
    vertices: [0, 0, 0, 1, 0, 0, 0, 1, 0, 0.25, -1e-7, 3.5],
    faces: [0, 1, 2, 0, 2, 3],
    uvs: [0, 0, 1, 0, 0, 1, 0.5, 0.5],
    texture: { w: 1, h: 1, rgb8_base64: "AAAA" },
  };
}

describe("buildObj", () => {
  it("emits v/vt/f lines with matching 1-based indices", () => {
    const text = buildObj(sampleResponse());
    const lines = text.trimEnd().split("\n");
    expect(lines.filter((l) => l.startsWith("v "))).toHaveLength(4);
    expect(lines.filter((l) => l.startsWith("vt "))).toHaveLength(4);
    expect(lines.filter((l) => l.startsWith("f "))).toHaveLength(2);
    expect(lines[lines.length - 1]).toBe("f 1/1 3/3 4/4");
  });

  it("rejects out-of-range face indices", () => {
    const bad = sampleResponse();
    bad.faces = [0, 1, 9];
    expect(() => buildObj(bad)).toThrow(/out of range/);
  });

  it("rejects mismatched uv counts", () => {
    const bad = sampleResponse();
    bad.uvs = [0, 0];
    expect(() => buildObj(bad)).toThrow(/uv count/);
  });

  it("round-trips through the primary mesh loader", () => {
    const dir = mkdtempSync(join(tmpdir(), "bipar-export-"));
    const objPath = join(dir, "export.obj");
    writeFileSync(objPath, buildObj(sampleResponse()));
    const script = [
      "import sys",
      "from bipar.mesh import load_mesh",
      "m = load_mesh(sys.argv[1])",
      "print(m.vertex_count, m.face_count)",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script, objPath], { encoding: "utf-8" });
    expect(out.trim()).toBe("4 2");
  });
});

describe("decodeTexture", () => {
  it("decodes base64 rgb bytes", () => {
    const bytes = decodeTexture(Buffer.from([10, 20, 30]).toString("base64"));
    expect(Array.from(bytes)).toEqual([10, 20, 30]);
  });
});
