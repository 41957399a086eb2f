/** Client-side assembly of downloadable OBJ text from an /eval response.
 *
 * Emits the same OBJ subset the service itself uses: v / vt lines and
 * triangular f lines with matching 1-based vertex and UV indices.
 */

import type { EvalResponse } from "./api.js";

export function buildObj(resp: EvalResponse): string {
  const { vertices, faces, uvs } = resp;
  if (vertices.length % 3 !== 0 || faces.length % 3 !== 0 || uvs.length % 2 !== 0) {
    throw new Error("malformed eval payload");
  }
  const nVerts = vertices.length / 3;
  if (uvs.length / 2 !== nVerts) {
    throw new Error(`uv count ${uvs.length / 2} does not match vertex count ${nVerts}`);
  }
  const lines: string[] = [];
  for (let i = 0; i < nVerts; i++) {
    lines.push(`v ${vertices[3 * i]} ${vertices[3 * i + 1]} ${vertices[3 * i + 2]}`);
  }
  for (let i = 0; i < nVerts; i++) {
    lines.push(`vt ${uvs[2 * i]} ${uvs[2 * i + 1]}`);
  }
  for (let i = 0; i < faces.length / 3; i++) {
    const a = faces[3 * i] + 1;
    const b = faces[3 * i + 1] + 1;
    const c = faces[3 * i + 2] + 1;
    if (a < 1 || b < 1 || c < 1 || a > nVerts || b > nVerts || c > nVerts) {
      throw new Error(`face index out of range: ${a} ${b} ${c}`);
    }
    lines.push(`f ${a}/${a} ${b}/${b} ${c}/${c}`);
  }
  return lines.join("\n") + "\n";
}

/** Decode the base64 RGB8 texture payload into raw bytes. */
export function decodeTexture(rgb8Base64: string): Uint8Array {
  const bin = atob(rgb8Base64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) {
    out[i] = bin.charCodeAt(i);
  }
  return out;
}
