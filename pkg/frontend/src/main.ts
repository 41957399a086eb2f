/** DOM wiring: control panel, viewport, export, connection banner. */

import type { EvalResponse, Meta } from "./api.js";
import { HttpTransport } from "./api.js";
import { buildObj, decodeTexture } from "./objexport.js";
import { MeshView } from "./render.js";
import { Session } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function slider(label: string, oninput: (v: number) => void): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "slider-row";
  const span = document.createElement("span");
  span.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = "-1";
  input.max = "1";
  input.step = "0.01";
  input.value = "0";
  input.addEventListener("input", () => oninput(parseFloat(input.value)));
  wrap.append(span, input);
  return wrap;
}

function download(name: string, blob: Blob): void {
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

function texturePng(resp: EvalResponse): Promise<Blob> {
  const { w, h, rgb8_base64 } = resp.texture;
  const canvas = document.createElement("canvas");
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(w, h);
  const rgb = decodeTexture(rgb8_base64);
  for (let i = 0; i < w * h; i++) {
    img.data[4 * i] = rgb[3 * i];
    img.data[4 * i + 1] = rgb[3 * i + 1];
    img.data[4 * i + 2] = rgb[3 * i + 2];
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  return new Promise((resolve, reject) =>
    canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("png encode failed"))), "image/png"),
  );
}

function buildControls(session: Session, meta: Meta): void {
  const shapeBox = el<HTMLDivElement>("shape-sliders");
  session.shapeSliders.forEach((_, i) => {
    shapeBox.append(slider(`shape ${i}`, (v) => session.setShapeSlider(i, v)));
  });

  const texBox = el<HTMLDivElement>("tex-sliders");
  session.texSliders.forEach((_, i) => {
    texBox.append(slider(`texture ${i}`, (v) => session.setTexSlider(i, v)));
  });

  const jointSelect = el<HTMLSelectElement>("joint-select");
  meta.joint_names.forEach((name, i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = name;
    jointSelect.append(opt);
  });

  const poseBox = el<HTMLDivElement>("pose-sliders");
  const axes = ["x", "y", "z"];
  const poseInputs: HTMLInputElement[] = [];
  axes.forEach((axis, a) => {
    const row = slider(`rot ${axis}`, (v) => session.setJointAngle(session.selectedJoint, a, v * Math.PI));
    poseInputs.push(row.querySelector("input")!);
    poseBox.append(row);
  });
  jointSelect.addEventListener("change", () => {
    session.selectedJoint = parseInt(jointSelect.value, 10);
    poseInputs.forEach((input, a) => {
      input.value = String(session.theta[3 * session.selectedJoint + a] / Math.PI);
    });
  });
  el<HTMLButtonElement>("reset-pose").addEventListener("click", () => {
    session.resetPose();
    poseInputs.forEach((input) => (input.value = "0"));
  });
}

async function start(): Promise<void> {
  const banner = el<HTMLDivElement>("banner");
  const baseUrl = (el<HTMLInputElement>("base-url").value || "").replace(/\/$/, "");
  const session = new Session(new HttpTransport(baseUrl));
  const view = new MeshView(el<HTMLCanvasElement>("viewport"));
  const exportBtn = el<HTMLButtonElement>("export");
  exportBtn.disabled = true;

  session.onRender = (resp) => {
    const rendered = view.show(resp);
    el<HTMLSpanElement>("status").textContent = `${rendered} vertices`;
    exportBtn.disabled = false;
  };
  session.onError = (err) => {
    banner.textContent = `eval failed: ${String(err)} (previous mesh kept)`;
    banner.classList.add("visible");
    setTimeout(() => banner.classList.remove("visible"), 4000);
  };

  try {
    const meta = await session.connect();
    banner.classList.remove("visible");
    buildControls(session, meta);
    session.scheduleEval(); // initial mean-character render
  } catch (err) {
    banner.textContent = `cannot reach service: ${String(err)}`;
    banner.classList.add("visible");
    el<HTMLButtonElement>("retry").classList.add("visible");
    return;
  }

  exportBtn.addEventListener("click", async () => {
    const resp = session.lastResponse;
    if (!resp) return;
    download("character.obj", new Blob([buildObj(resp)], { type: "text/plain" }));
    download("texture.png", await texturePng(resp));
  });

  window.addEventListener("resize", () => view.resize());
}

el<HTMLButtonElement>("connect").addEventListener("click", () => void start());
el<HTMLButtonElement>("retry").addEventListener("click", () => void start());
