export * from "./types.js";
export * from "./api.js";
export * from "./gating.js";
export * from "./blind_ab.js";
export * from "./referenced_annotation.js";
export * from "./run_board.js";
