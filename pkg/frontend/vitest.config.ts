import { defineConfig } from "vitest/config";

// Every API call shells out to the Python CLI, so the parity suite spawns
// on the order of a hundred processes. Budget accordingly.
export default defineConfig({
  test: {
    testTimeout: 600_000,
    hookTimeout: 60_000,
  },
});
