import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // tfjs graphs on the pure-JS backend are slow; training smokes need room
    testTimeout: 120_000,
    hookTimeout: 60_000,
    pool: "forks",
  },
});
