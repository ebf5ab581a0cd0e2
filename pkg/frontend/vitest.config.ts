import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: ["tests/global-setup.ts"],
    // the demo service is a single shared process; keep test files sequential
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 300_000,
  },
});
