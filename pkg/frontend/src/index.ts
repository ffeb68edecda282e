export * from "./api.js";
export * from "./rules.js";
export * from "./editor.js";
export * from "./stats.js";
export * from "./gallery.js";
