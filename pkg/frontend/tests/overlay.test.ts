import { describe, expect, it } from "vitest";

import { OVERLAY_ID, renderAlert } from "../src/overlay.js";

// Minimal stand-in for the page document: enough surface for the overlay.
class FakeElement {
  id = "";
  textContent = "";
  children: FakeElement[] = [];
  parent: FakeElement | null = null;
  attrs = new Map<string, string>();
  listeners = new Map<string, Array<() => void>>();

  constructor(public tag: string) {}

  setAttribute(name: string, value: string): void {
    this.attrs.set(name, value);
  }

  addEventListener(type: string, fn: () => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(fn);
    this.listeners.set(type, existing);
  }

  append(...nodes: FakeElement[]): void {
    for (const node of nodes) {
      node.parent = this;
      this.children.push(node);
    }
  }

  appendChild(node: FakeElement): FakeElement {
    this.append(node);
    return node;
  }

  remove(): void {
    if (this.parent) {
      this.parent.children = this.parent.children.filter((c) => c !== this);
      this.parent = null;
    }
  }

  click(): void {
    for (const fn of this.listeners.get("click") ?? []) fn();
  }

  *walk(): Generator<FakeElement> {
    yield this;
    for (const child of this.children) yield* child.walk();
  }
}

class FakeDocument {
  body = new FakeElement("body");

  createElement(tag: string): FakeElement {
    return new FakeElement(tag);
  }

  getElementById(id: string): FakeElement | null {
    for (const node of this.body.walk()) {
      if (node.id === id) return node;
    }
    return null;
  }
}

function findById(doc: FakeDocument, id: string): FakeElement | null {
  return doc.getElementById(id);
}

describe("warning overlay", () => {
  it("renders above everything with the score and both controls", () => {
    const doc = new FakeDocument();
    renderAlert(doc as unknown as Document, 0.99, { onLeave: () => {}, onProceed: () => {} });
    const overlay = findById(doc, OVERLAY_ID)!;
    expect(overlay).not.toBeNull();
    expect(overlay.attrs.get("style")).toContain("z-index:2147483647");
    expect(overlay.attrs.get("style")).toContain("position:fixed");
    const texts = [...overlay.walk()].map((n) => n.textContent).join(" ");
    expect(texts).toContain("99.0%");
    expect(findById(doc, `${OVERLAY_ID}-leave`)).not.toBeNull();
    expect(findById(doc, `${OVERLAY_ID}-proceed`)).not.toBeNull();
  });

  it("proceed removes the overlay and reports the override", () => {
    const doc = new FakeDocument();
    let overridden = false;
    renderAlert(doc as unknown as Document, 0.8, {
      onLeave: () => {},
      onProceed: () => { overridden = true; },
    });
    findById(doc, `${OVERLAY_ID}-proceed`)!.click();
    expect(overridden).toBe(true);
    expect(findById(doc, OVERLAY_ID)).toBeNull();
  });

  it("leave removes the overlay and triggers navigation away", () => {
    const doc = new FakeDocument();
    let left = false;
    renderAlert(doc as unknown as Document, 0.8, {
      onLeave: () => { left = true; },
      onProceed: () => {},
    });
    findById(doc, `${OVERLAY_ID}-leave`)!.click();
    expect(left).toBe(true);
    expect(findById(doc, OVERLAY_ID)).toBeNull();
  });

  it("re-rendering replaces any existing overlay", () => {
    const doc = new FakeDocument();
    renderAlert(doc as unknown as Document, 0.7, { onLeave: () => {}, onProceed: () => {} });
    renderAlert(doc as unknown as Document, 0.9, { onLeave: () => {}, onProceed: () => {} });
    const overlays = [...doc.body.walk()].filter((n) => n.id === OVERLAY_ID);
    expect(overlays.length).toBe(1);
  });
});
