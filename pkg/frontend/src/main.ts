/** DOM wiring: canvas viewer, toolbar, and the App core behind them. */

import { ApiClient } from "./api.js";
import { App, type Gesture } from "./app.js";
import type { Tool } from "./viewer.js";

const api = new ApiClient("");
const app = new App(api);

const fileInput = document.getElementById("file") as HTMLInputElement;
const canvas = document.getElementById("view") as HTMLCanvasElement;
const overlayCanvas = document.getElementById("overlay") as HTMLCanvasElement;
const sliceSlider = document.getElementById("slice") as HTMLInputElement;
const sliceLabel = document.getElementById("slice-label") as HTMLElement;
const opacitySlider = document.getElementById("opacity") as HTMLInputElement;
const roundLabel = document.getElementById("round") as HTMLElement;
const banner = document.getElementById("banner") as HTMLElement;
const historyList = document.getElementById("history") as HTMLElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const polarityToggle = document.getElementById("polarity") as HTMLInputElement;

function setBanner(message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function setControlsEnabled(enabled: boolean): void {
  for (const el of [sliceSlider, undoButton, exportButton, polarityToggle]) {
    el.disabled = !enabled;
  }
  undoButton.disabled = !enabled || app.state === null || app.state.round === 0;
}

function drawSlice(): void {
  const state = app.state;
  if (!state) return;
  const img = new Image();
  img.onload = () => {
    canvas.width = img.width;
    canvas.height = img.height;
    canvas.getContext("2d")!.drawImage(img, 0, 0);
    drawOverlay();
  };
  img.src = api.sliceUrl(state.sessionId, state.slice);
}

function drawOverlay(): void {
  const state = app.state;
  if (!state) return;
  const [ny, nx] = [state.shape[1]!, state.shape[2]!];
  overlayCanvas.width = nx;
  overlayCanvas.height = ny;
  const ctx = overlayCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, nx, ny);
  const plane = app.overlayPlane();
  if (!plane) return;
  const image = ctx.createImageData(nx, ny);
  const alpha = Math.round(state.overlayOpacity * 255);
  for (let i = 0; i < plane.length; i++) {
    if (plane[i]! > 0) {
      image.data[4 * i] = 255;      // red overlay
      image.data[4 * i + 3] = alpha;
    }
  }
  ctx.putImageData(image, 0, 0);
}

function refreshHud(): void {
  const state = app.state;
  if (!state) return;
  sliceLabel.textContent = `z = ${state.slice} / ${state.shape[0]! - 1}`;
  roundLabel.textContent = `round ${state.round}`;
  historyList.innerHTML = "";
  for (const entry of state.rounds) {
    const li = document.createElement("li");
    li.textContent = `#${entry.round} ${entry.description} ` +
      `(${entry.changedVoxels} voxels changed)`;
    historyList.appendChild(li);
  }
  setControlsEnabled(!app.busy);
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  try {
    await app.openCase(await file.arrayBuffer());
    const state = app.state!;
    sliceSlider.min = "0";
    sliceSlider.max = String(state.shape[0]! - 1);
    sliceSlider.value = String(state.slice);
    setBanner(null);
    drawSlice();
    refreshHud();
  } catch {
    setBanner(app.error);
  }
});

sliceSlider.addEventListener("input", () => {
  if (!app.state) return;
  app.state.slice = Number(sliceSlider.value);
  drawSlice();
  refreshHud();
});

opacitySlider.addEventListener("input", () => {
  if (!app.state) return;
  app.state.overlayOpacity = Number(opacitySlider.value) / 100;
  drawOverlay();
});

polarityToggle.addEventListener("change", () => {
  if (!app.state) return;
  app.state.polarity = polarityToggle.checked ? "negative" : "positive";
});

for (const tool of ["point", "box", "lasso", "scribble"] as Tool[]) {
  document.getElementById(`tool-${tool}`)!.addEventListener("click", () => {
    if (!app.state) return;
    app.state.tool = tool;
    for (const other of ["point", "box", "lasso", "scribble"]) {
      document.getElementById(`tool-${other}`)!
        .classList.toggle("active", other === tool);
    }
  });
}

// gesture capture: click for point, drag for box, freehand for the rest
let dragging = false;
let path: [number, number][] = [];

function canvasYX(event: MouseEvent): [number, number] {
  const rect = overlayCanvas.getBoundingClientRect();
  const scaleY = overlayCanvas.height / rect.height;
  const scaleX = overlayCanvas.width / rect.width;
  return [(event.clientY - rect.top) * scaleY,
          (event.clientX - rect.left) * scaleX];
}

overlayCanvas.addEventListener("mousedown", (event) => {
  if (!app.state || app.busy) return;
  dragging = true;
  path = [canvasYX(event)];
});

overlayCanvas.addEventListener("mousemove", (event) => {
  if (dragging) path.push(canvasYX(event));
});

overlayCanvas.addEventListener("mouseup", async () => {
  if (!dragging || !app.state) return;
  dragging = false;
  const tool = app.state.tool;
  let gesture: Gesture;
  if (tool === "point" || path.length < 3) {
    const [y, x] = path[0]!;
    gesture = { type: "click", y, x };
  } else if (tool === "box") {
    gesture = { type: "rect", a: path[0]!, b: path[path.length - 1]! };
  } else {
    gesture = { type: "path", points: path };
  }
  try {
    await app.placePrompt(gesture);
    setBanner(null);
  } catch {
    setBanner(app.error);
  }
  drawOverlay();
  refreshHud();
});

undoButton.addEventListener("click", async () => {
  try {
    await app.undo();
    setBanner(null);
  } catch {
    setBanner(app.error);
  }
  drawOverlay();
  refreshHud();
});

exportButton.addEventListener("click", async () => {
  try {
    const bytes = await app.exportMask();
    const url = URL.createObjectURL(new Blob([bytes]));
    const a = document.createElement("a");
    a.href = url;
    a.download = "mask.nii.gz";
    a.click();
    URL.revokeObjectURL(url);
    setBanner(null);
  } catch {
    setBanner(app.error);
  }
});

setControlsEnabled(false);
