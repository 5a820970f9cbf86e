// Registrable-domain (eTLD+1) matching for the allowlist. The suffix set is
// a bundled snapshot of common public suffixes; entries are compared by
// registrable domain so "news.example.co.uk" matches an allowlisted
// "example.co.uk".

const MULTI_LABEL_SUFFIXES = new Set([
  "co.uk", "org.uk", "ac.uk", "gov.uk", "net.uk", "me.uk",
  "com.au", "net.au", "org.au", "edu.au", "gov.au",
  "co.nz", "net.nz", "org.nz",
  "co.za", "org.za", "gov.za",
  "com.br", "net.br", "org.br", "gov.br",
  "com.mx", "org.mx", "gob.mx",
  "com.ar", "gob.ar",
  "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn",
  "com.hk", "org.hk", "com.tw", "org.tw",
  "com.sg", "net.sg", "com.my", "co.th", "co.id",
  "co.kr", "or.kr", "co.jp", "or.jp", "ne.jp", "ac.jp",
  "co.in", "net.in", "org.in", "gov.in",
  "co.il", "org.il", "com.tr", "org.tr",
  "com.sa", "com.eg", "co.ke", "com.ng", "com.ua",
  "com.pl", "net.pl", "com.pt", "com.gr",
  "github.io", "gitlab.io", "pages.dev", "netlify.app", "vercel.app",
  "web.app", "firebaseapp.com", "herokuapp.com", "appspot.com",
  "azurewebsites.net", "amazonaws.com", "blogspot.com", "wordpress.com",
]);

export function registrableDomain(host: string): string {
  const labels = host.toLowerCase().replace(/\.$/, "").split(".");
  if (labels.length <= 1) return host.toLowerCase();
  const lastTwo = labels.slice(-2).join(".");
  const lastThree = labels.slice(-3).join(".");
  if (labels.length >= 3 && MULTI_LABEL_SUFFIXES.has(lastTwo)) {
    return lastThree;
  }
  return lastTwo;
}

export function hostOf(url: string): string | null {
  try {
    const parsed = new URL(url);
    if (parsed.protocol !== "http:" && parsed.protocol !== "https:") return null;
    return parsed.hostname;
  } catch {
    return null;
  }
}

export class Allowlist {
  private domains: Set<string>;

  constructor(domains: Iterable<string> = []) {
    this.domains = new Set([...domains].map((d) => registrableDomain(d)));
  }

  contains(url: string): boolean {
    const host = hostOf(url);
    if (host === null) return false;
    return this.domains.has(registrableDomain(host));
  }

  toJSON(): string[] {
    return [...this.domains].sort();
  }
}

// Seeded from the top of a popularity ranking; users edit it in options.
export const DEFAULT_ALLOWLIST = [
  "google.com", "youtube.com", "facebook.com", "wikipedia.org", "instagram.com",
  "reddit.com", "amazon.com", "duckduckgo.com", "yahoo.com", "x.com",
  "whatsapp.com", "bing.com", "openai.com", "netflix.com", "live.com",
  "office.com", "linkedin.com", "twitch.tv", "microsoft.com", "apple.com",
  "github.com", "stackoverflow.com", "mozilla.org", "cloudflare.com", "zoom.us",
];
