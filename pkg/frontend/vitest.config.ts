import { defineConfig } from "vitest/config";

// Source files use browser-style ".js" import specifiers (what tsc emits for
// ES modules); map them back to the .ts sources for the test runner.
export default defineConfig({
  plugins: [
    {
      name: "resolve-ts-from-js-specifier",
      enforce: "pre",
      async resolveId(source, importer) {
        if (importer && source.startsWith(".") && source.endsWith(".js")) {
          const asTs = source.slice(0, -3) + ".ts";
          const resolved = await this.resolve(asTs, importer, { skipSelf: true });
          if (resolved) return resolved.id;
        }
        return null;
      },
    },
  ],
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 60_000,
  },
});
