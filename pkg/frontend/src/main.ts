/** DOM wiring: sliders, canvas, banners. All pixel math stays server-side;
 * this file only moves bytes between the HTTP API and the canvas. */

import { App, Display, Meta } from "./app.js";
import { Frame } from "./requests.js";
import { A_DETENTS, ViewerState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("frame");
const ctx = canvas.getContext("2d")!;
const banner = el<HTMLDivElement>("banner");
const warning = el<HTMLDivElement>("warning");
const readout = el<HTMLDivElement>("readout");
const sliderA = el<HTMLInputElement>("slider-a");
const sliderZ = el<HTMLInputElement>("slider-z");
const modeButtons = {
  view: el<HTMLButtonElement>("mode-view"),
  closeup: el<HTMLButtonElement>("mode-closeup"),
  "flow-preview": el<HTMLButtonElement>("mode-flow"),
};

const detents = el<HTMLDataListElement>("a-detents");
for (const value of A_DETENTS) {
  const option = document.createElement("option");
  option.value = String(value);
  detents.appendChild(option);
}

let lastState: ViewerState | null = null;

const display: Display = {
  setMeta(meta: Meta) {
    canvas.width = meta.width;
    canvas.height = meta.height;
    readout.textContent = `pair ${meta.pair} (${meta.width}×${meta.height})`;
  },
  showFrame(frame: Frame) {
    const blob = new Blob([frame.body], { type: frame.contentType });
    createImageBitmap(blob).then((bitmap) => {
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      ctx.drawImage(bitmap, 0, 0);
      drawCrosshair();
    });
    warning.hidden = frame.warning === null;
    warning.textContent = frame.warning ?? "";
  },
  showError(message: string) {
    banner.hidden = false;
    banner.textContent = message;
  },
  clearError() {
    banner.hidden = true;
  },
  updateReadouts(state: ViewerState) {
    lastState = state;
    readout.textContent =
      `a=${state.a.toFixed(3)}  z=${state.z.toFixed(2)}  ` +
      `center=(${state.center.cx.toFixed(3)}, ${state.center.cy.toFixed(3)})  ` +
      `mode=${state.mode}`;
    for (const [mode, button] of Object.entries(modeButtons)) {
      button.classList.toggle("active", state.mode === mode);
    }
  },
};

function drawCrosshair() {
  if (!lastState || lastState.mode !== "closeup") return;
  const x = lastState.center.cx * canvas.width;
  const y = lastState.center.cy * canvas.height;
  ctx.strokeStyle = "rgba(255, 80, 80, 0.9)";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x - 6, y);
  ctx.lineTo(x + 6, y);
  ctx.moveTo(x, y - 6);
  ctx.lineTo(x, y + 6);
  ctx.stroke();
}

const app = new App({ fetchImpl: (url, init) => fetch(url, init), display });

sliderA.addEventListener("input", () => {
  void app.onSliderChange("a", Number(sliderA.value));
});
sliderZ.addEventListener("input", () => {
  void app.onSliderChange("z", Number(sliderZ.value));
});
canvas.addEventListener("click", (event) => {
  const rect = canvas.getBoundingClientRect();
  const px = ((event.clientX - rect.left) / rect.width) * canvas.width;
  const py = ((event.clientY - rect.top) / rect.height) * canvas.height;
  void app.onCanvasClick(px, py);
});
for (const [mode, button] of Object.entries(modeButtons)) {
  button.addEventListener("click", () => {
    void app.setMode(mode as ViewerState["mode"]);
  });
}

void app.init();
