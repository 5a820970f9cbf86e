// Service worker: binds the guard state machine to browser APIs. All
// inference is local; no screenshot, URL, or score ever leaves the machine.

import { Allowlist, DEFAULT_ALLOWLIST } from "./guard/allowlist.js";
import { Guard, CaptureResult } from "./guard/state.js";
import { preprocess, deviceClassOf } from "./preprocess.js";
import { BundleModel, loadBundle } from "./runtime/model.js";
import { fromImageData } from "./runtime/tensor.js";

let guardPromise: Promise<Guard> | null = null;

async function fetchBundleFile(name: string): Promise<ArrayBuffer> {
  const url = chrome.runtime.getURL(`bundle/${name}`);
  const response = await fetch(url);
  if (!response.ok) throw new Error(`cannot load bundle file ${name}`);
  return response.arrayBuffer();
}

async function dataUrlToImageData(dataUrl: string): Promise<CaptureResult> {
  const blob = await (await fetch(dataUrl)).blob();
  const bitmap = await createImageBitmap(blob);
  const canvas = new OffscreenCanvas(bitmap.width, bitmap.height);
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  const image = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  return { width: image.width, height: image.height, data: image.data };
}

async function appendLog(entry: Record<string, unknown>): Promise<void> {
  const stamped = { ts: new Date().toISOString(), ...entry };
  const { log = [] } = await chrome.storage.local.get("log");
  log.push(JSON.stringify(stamped));
  while (log.length > 2000) log.shift();
  await chrome.storage.local.set({ log });
}

async function buildGuard(): Promise<Guard> {
  const files = await loadBundle(fetchBundleFile);
  const model = new BundleModel(files);
  const { allowlist = DEFAULT_ALLOWLIST } = await chrome.storage.local.get("allowlist");
  return new Guard(new Allowlist(allowlist), {
    capture: async (tabId) => {
      const tab = await chrome.tabs.get(tabId);
      const dataUrl = await chrome.tabs.captureVisibleTab(tab.windowId, { format: "png" });
      return dataUrlToImageData(dataUrl);
    },
    classify: async (shot) => {
      const raw = fromImageData(shot);
      const device = deviceClassOf(shot.width, shot.height);
      const input = preprocess(raw, model.preprocess, device);
      const probs = model.run(input);
      return { scoreSe: probs[1] };
    },
    showAlert: (tabId, scoreSe) => {
      chrome.tabs.sendMessage(tabId, { type: "seguard:alert", scoreSe });
    },
    log: (entry) => {
      void appendLog(entry);
    },
  }, { alertThreshold: model.card.alert_threshold });
}

function guard(): Promise<Guard> {
  if (!guardPromise) guardPromise = buildGuard();
  return guardPromise;
}

chrome.tabs.onUpdated.addListener((tabId, changeInfo, tab) => {
  if (changeInfo.status === "loading" && tab.url) {
    void guard().then((g) => g.onNavigation(tabId, tab.url!));
  }
});

chrome.tabs.onRemoved.addListener((tabId) => {
  void guard().then((g) => g.onTabClosed(tabId));
});

chrome.runtime.onMessage.addListener((message, sender, sendResponse) => {
  const tabId = sender.tab?.id;
  if (tabId === undefined) return false;
  if (message.type === "seguard:interaction") {
    void guard().then((g) => g.onInteraction(tabId, message.kind));
  } else if (message.type === "seguard:mutation") {
    void guard().then((g) => g.onDomMutation(tabId, message.changedFraction));
  } else if (message.type === "seguard:override") {
    void guard().then((g) => g.onUserOverride(tabId));
  } else if (message.type === "seguard:leave") {
    void chrome.tabs.update(tabId, { url: "about:blank" });
  }
  sendResponse({ ok: true });
  return false;
});
