import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 420_000,
    hookTimeout: 420_000,
    pool: "forks",
  },
});
