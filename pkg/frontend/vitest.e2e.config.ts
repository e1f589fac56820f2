import { defineConfig } from "vitest/config";

// Scripted end-to-end run: drives the built DOM against a live session
// service spawned by the test itself.
export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.e2e.test.ts"],
    testTimeout: 60_000,
    hookTimeout: 60_000,
    fileParallelism: false,
  },
});
