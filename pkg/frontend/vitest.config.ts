import { defineConfig } from "vitest/config";

// The e2e spec spawns the backing service on this port; the test window uses
// the same origin (as when the portal is reverse-proxied next to the API), so
// happy-dom's fetch keeps the Authorization header on every request.
export const E2E_PORT = 28417;

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        url: `http://127.0.0.1:${E2E_PORT}`,
      },
    },
    testTimeout: 120_000,
    hookTimeout: 120_000,
    include: ["test/**/*.spec.ts"],
  },
});
