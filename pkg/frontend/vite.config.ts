import { defineConfig } from "vitest/config";

export default defineConfig({
  base: "./",
  server: {
    // during development the session service runs separately
    proxy: { "/api": "http://127.0.0.1:8765" },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    exclude: ["tests/**/*.e2e.test.ts", "node_modules/**"],
  },
});
