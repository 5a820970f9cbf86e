// Per-tab guard state machine, kept free of browser APIs so it is testable
// end to end: the host environment supplies capture/classify/alert adapters.
//
// Lifecycle per tab:
//   navigation  -> "idle" (allowlisted / unsupported URL) or "armed"
//   interaction -> single in-flight classification -> "classified"
//   big DOM mutation after classification -> re-armed (page changed shape)

import { Allowlist } from "./allowlist.js";

export type TabStatus = "idle" | "armed" | "classifying" | "classified";

export interface Classification {
  verdict: "benign" | "se";
  scoreSe: number;
  latencyMs: number;
}

export interface TabState {
  status: TabStatus;
  url: string | null;
  lastInteractionAt: number;
  result: Classification | null;
  userOverridden: boolean;
}

export interface CaptureResult {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA viewport pixels
}

export interface GuardAdapters {
  capture: (tabId: number) => Promise<CaptureResult>;
  classify: (capture: CaptureResult) => Promise<{ scoreSe: number }>;
  showAlert: (tabId: number, scoreSe: number) => void;
  log: (entry: Record<string, unknown>) => void;
  now?: () => number;
}

export interface GuardOptions {
  alertThreshold: number;
  debounceMs?: number; // minimum spacing between classification triggers
  rearmMutationFraction?: number; // DOM growth/shrink fraction that re-arms
}

const DEBOUNCE_MS = 250;
const REARM_FRACTION = 0.3;

export class Guard {
  private tabs = new Map<number, TabState>();

  constructor(
    private allowlist: Allowlist,
    private adapters: GuardAdapters,
    private options: GuardOptions,
  ) {}

  private now(): number {
    return this.adapters.now ? this.adapters.now() : Date.now();
  }

  state(tabId: number): TabState {
    let tab = this.tabs.get(tabId);
    if (!tab) {
      tab = { status: "idle", url: null, lastInteractionAt: -Infinity,
              result: null, userOverridden: false };
      this.tabs.set(tabId, tab);
    }
    return tab;
  }

  /** Navigation resets the tab; allowlisted and non-web URLs stay idle. */
  onNavigation(tabId: number, url: string): TabStatus {
    const tab = this.state(tabId);
    tab.url = url;
    tab.result = null;
    tab.userOverridden = false;
    tab.lastInteractionAt = -Infinity;
    let status: TabStatus = "armed";
    if (!/^https?:/i.test(url)) {
      status = "idle";
      this.adapters.log({ event: "ignored_url", url });
    } else if (this.allowlist.contains(url)) {
      status = "idle";
    }
    tab.status = status;
    return status;
  }

  /** A meaningful interaction (click/keypress) triggers one classification. */
  async onInteraction(tabId: number, kind: "click" | "keypress"): Promise<Classification | null> {
    const tab = this.state(tabId);
    if (tab.status !== "armed") return null; // idle, in-flight, or already done
    const now = this.now();
    if (now - tab.lastInteractionAt < (this.options.debounceMs ?? DEBOUNCE_MS)) {
      return null;
    }
    tab.lastInteractionAt = now;
    tab.status = "classifying";
    const started = this.now();
    try {
      const shot = await this.adapters.capture(tabId);
      const { scoreSe } = await this.adapters.classify(shot);
      const latencyMs = this.now() - started;
      const verdict = scoreSe >= this.options.alertThreshold ? "se" : "benign";
      tab.result = { verdict, scoreSe, latencyMs };
      tab.status = "classified";
      this.adapters.log({
        event: "classified", url: tab.url, kind, verdict, scoreSe, latencyMs,
      });
      if (verdict === "se") this.adapters.showAlert(tabId, scoreSe);
      return tab.result;
    } catch (error) {
      tab.status = "armed"; // capture denied or failed: stay armed, log it
      this.adapters.log({ event: "capture_failed", url: tab.url, error: String(error) });
      return null;
    }
  }

  /** Substantial DOM mutation after a verdict re-arms the tab. */
  onDomMutation(tabId: number, changedFraction: number): void {
    const tab = this.state(tabId);
    if (tab.status === "classified" && !tab.userOverridden &&
        changedFraction >= (this.options.rearmMutationFraction ?? REARM_FRACTION)) {
      tab.status = "armed";
      tab.result = null;
    }
  }

  /** User pressed "proceed anyway" on the overlay. */
  onUserOverride(tabId: number): void {
    const tab = this.state(tabId);
    tab.userOverridden = true;
    this.adapters.log({ event: "user_override", url: tab.url });
  }

  onTabClosed(tabId: number): void {
    this.tabs.delete(tabId);
  }
}
