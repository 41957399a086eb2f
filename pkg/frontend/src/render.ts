/** Three.js view: orthographic camera, flat-textured mesh, minimal orbit.
 *
 * The view renders exactly the vertices/faces/uvs the service returned; the
 * only geometry math here is the camera transform.
 */

import * as THREE from "three";

import type { EvalResponse } from "./api.js";
import { decodeTexture } from "./objexport.js";

export class MeshView {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.OrthographicCamera;
  private mesh: THREE.Mesh | null = null;
  private yaw = 0.5;
  private pitch = 0.2;
  private zoom = 1.0;
  private aspect = 1.0;
  private center = new THREE.Vector3(0, 1, 0);

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setClearColor(0x20242c);
    this.camera = new THREE.OrthographicCamera(-1, 1, 1, -1, 0.01, 100);
    this.attachOrbit();
    this.resize();
  }

  resize(): void {
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    this.renderer.setSize(w, h, false);
    this.aspect = w / Math.max(h, 1);
    this.draw();
  }

  /** Replace the displayed mesh with the latest eval payload, verbatim. */
  show(resp: EvalResponse): number {
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.Float32BufferAttribute(resp.vertices, 3));
    geometry.setAttribute("uv", new THREE.Float32BufferAttribute(resp.uvs, 2));
    geometry.setIndex(resp.faces);
    geometry.computeVertexNormals();

    const { w, h, rgb8_base64 } = resp.texture;
    const rgba = new Uint8Array(w * h * 4);
    const rgb = decodeTexture(rgb8_base64);
    for (let i = 0; i < w * h; i++) {
      rgba[4 * i] = rgb[3 * i];
      rgba[4 * i + 1] = rgb[3 * i + 1];
      rgba[4 * i + 2] = rgb[3 * i + 2];
      rgba[4 * i + 3] = 255;
    }
    const texture = new THREE.DataTexture(rgba, w, h, THREE.RGBAFormat);
    texture.needsUpdate = true;

    if (this.mesh) {
      this.scene.remove(this.mesh);
      this.mesh.geometry.dispose();
      (this.mesh.material as THREE.Material).dispose();
    }
    const material = new THREE.MeshBasicMaterial({ map: texture, side: THREE.DoubleSide });
    this.mesh = new THREE.Mesh(geometry, material);
    this.scene.add(this.mesh);

    geometry.computeBoundingSphere();
    const sphere = geometry.boundingSphere;
    if (sphere) {
      this.center.copy(sphere.center);
      this.zoom = 1.2 * sphere.radius;
    }
    this.draw();
    return geometry.getAttribute("position").count;
  }

  private attachOrbit(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.yaw += (e.clientX - lastX) * 0.01;
      this.pitch = Math.min(Math.max(this.pitch + (e.clientY - lastY) * 0.01, -1.4), 1.4);
      lastX = e.clientX;
      lastY = e.clientY;
      this.draw();
    });
    this.canvas.addEventListener("pointerup", () => {
      dragging = false;
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.zoom *= e.deltaY > 0 ? 1.1 : 1 / 1.1;
      this.draw();
    });
  }

  draw(): void {
    const cp = new THREE.Vector3(
      Math.sin(this.yaw) * Math.cos(this.pitch),
      Math.sin(this.pitch),
      Math.cos(this.yaw) * Math.cos(this.pitch),
    )
      .multiplyScalar(10)
      .add(this.center);
    this.camera.position.copy(cp);
    this.camera.lookAt(this.center);
    this.camera.left = -this.aspect * this.zoom;
    this.camera.right = this.aspect * this.zoom;
    this.camera.top = this.zoom;
    this.camera.bottom = -this.zoom;
    this.camera.updateProjectionMatrix();
    this.renderer.render(this.scene, this.camera);
  }
}
