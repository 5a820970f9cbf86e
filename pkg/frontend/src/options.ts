// Options page: edit the allowlisted domains (one per line).

import { DEFAULT_ALLOWLIST, registrableDomain } from "./guard/allowlist.js";

async function load(): Promise<void> {
  const { allowlist = DEFAULT_ALLOWLIST } = await chrome.storage.local.get("allowlist");
  const box = document.getElementById("allowlist") as HTMLTextAreaElement;
  box.value = allowlist.join("\n");
}

async function save(): Promise<void> {
  const box = document.getElementById("allowlist") as HTMLTextAreaElement;
  const domains = box.value
    .split("\n")
    .map((line) => line.trim().toLowerCase())
    .filter((line) => line.length > 0)
    .map((line) => registrableDomain(line));
  await chrome.storage.local.set({ allowlist: [...new Set(domains)].sort() });
  const status = document.getElementById("status")!;
  status.textContent = `Saved ${domains.length} domains.`;
  setTimeout(() => (status.textContent = ""), 1500);
}

document.getElementById("save")!.addEventListener("click", () => void save());
void load();
