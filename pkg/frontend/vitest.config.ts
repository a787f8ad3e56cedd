import { defineConfig } from "vitest/config";

export default defineConfig({
  resolve: {
    // Sources import with .js extensions for native browser ESM; map the
    // relative specifiers back to the .ts files for the test runner.
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
