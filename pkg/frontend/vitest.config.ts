import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the integration test talks to a local service; same-origin keeps
    // happy-dom's fetch from applying cross-origin rules
    environmentOptions: {
      happyDOM: { url: "http://127.0.0.1:8931" },
    },
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
