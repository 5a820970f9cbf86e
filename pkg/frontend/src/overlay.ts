// Full-viewport warning overlay rendered by the content script. Lives in the
// page but above its z-order; the page cannot dismiss it (the extension
// removes it only on an explicit user choice).

export interface OverlayChoice {
  onLeave: () => void;
  onProceed: () => void;
}

export const OVERLAY_ID = "seguard-alert-overlay";

export function renderAlert(doc: Document, scoreSe: number, choice: OverlayChoice): HTMLElement {
  const existing = doc.getElementById(OVERLAY_ID);
  if (existing) existing.remove();

  const overlay = doc.createElement("div");
  overlay.id = OVERLAY_ID;
  overlay.setAttribute(
    "style",
    [
      "position:fixed", "inset:0", "z-index:2147483647",
      "background:rgba(120,10,10,0.92)", "color:#fff",
      "display:flex", "flex-direction:column", "align-items:center",
      "justify-content:center", "font-family:system-ui,sans-serif",
      "text-align:center", "padding:24px",
    ].join(";"),
  );

  const title = doc.createElement("h1");
  title.textContent = "Warning: this page looks like a social engineering attack";
  const detail = doc.createElement("p");
  detail.textContent =
    `The page's appearance matched known scam patterns ` +
    `(confidence ${(scoreSe * 100).toFixed(1)}%). ` +
    `It may be trying to trick you into downloading software, ` +
    `granting permissions, or calling a fake support number.`;

  const buttons = doc.createElement("div");
  const leave = doc.createElement("button");
  leave.id = `${OVERLAY_ID}-leave`;
  leave.textContent = "Leave page";
  leave.setAttribute("style", "margin:8px;padding:10px 18px;font-size:16px");
  leave.addEventListener("click", () => {
    overlay.remove();
    choice.onLeave();
  });
  const proceed = doc.createElement("button");
  proceed.id = `${OVERLAY_ID}-proceed`;
  proceed.textContent = "Proceed anyway";
  proceed.setAttribute("style", "margin:8px;padding:10px 18px;font-size:16px");
  proceed.addEventListener("click", () => {
    overlay.remove();
    choice.onProceed();
  });
  buttons.append(leave, proceed);
  overlay.append(title, detail, buttons);
  doc.body.appendChild(overlay);
  return overlay;
}
