// Minimal typings for the extension API surface this project touches.
// Kept local so the build has no dependency on external type packages.

interface ChromeTab {
  id?: number;
  url?: string;
  windowId: number;
}

declare const chrome: {
  runtime: {
    getURL(path: string): string;
    sendMessage(message: unknown): Promise<unknown>;
    onMessage: {
      addListener(
        fn: (message: any, sender: { tab?: ChromeTab },
             sendResponse: (r: unknown) => void) => boolean | void,
      ): void;
    };
  };
  tabs: {
    get(tabId: number): Promise<ChromeTab>;
    update(tabId: number, props: { url: string }): Promise<unknown>;
    captureVisibleTab(windowId: number, options: { format: string }): Promise<string>;
    sendMessage(tabId: number, message: unknown): void;
    onUpdated: {
      addListener(
        fn: (tabId: number, changeInfo: { status?: string }, tab: ChromeTab) => void,
      ): void;
    };
    onRemoved: { addListener(fn: (tabId: number) => void): void };
  };
  storage: {
    local: {
      get(key: string): Promise<Record<string, any>>;
      set(items: Record<string, unknown>): Promise<void>;
    };
  };
};
