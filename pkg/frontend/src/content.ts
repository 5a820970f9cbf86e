// Content script: forwards meaningful interactions to the service worker,
// watches for large DOM changes, and renders the warning overlay on demand.

import { renderAlert } from "./overlay.js";

let baselineNodeCount = document.getElementsByTagName("*").length;

function send(message: Record<string, unknown>): void {
  try {
    void chrome.runtime.sendMessage(message);
  } catch {
    // extension context gone (navigation teardown); nothing to do
  }
}

for (const kind of ["click", "keypress"] as const) {
  window.addEventListener(
    kind,
    () => send({ type: "seguard:interaction", kind }),
    { capture: true, passive: true },
  );
}

const observer = new MutationObserver(() => {
  const count = document.getElementsByTagName("*").length;
  const base = Math.max(baselineNodeCount, 1);
  const changedFraction = Math.abs(count - baselineNodeCount) / base;
  if (changedFraction >= 0.3) {
    baselineNodeCount = count;
    send({ type: "seguard:mutation", changedFraction });
  }
});
observer.observe(document.documentElement, { childList: true, subtree: true });

chrome.runtime.onMessage.addListener((message) => {
  if (message.type === "seguard:alert") {
    renderAlert(document, message.scoreSe, {
      onLeave: () => send({ type: "seguard:leave" }),
      onProceed: () => send({ type: "seguard:override" }),
    });
  }
});
