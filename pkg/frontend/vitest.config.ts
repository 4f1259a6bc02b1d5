import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the e2e suite boots a real server process, so be generous
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
