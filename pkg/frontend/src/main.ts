import { makeApi } from "./api";
import { createApp } from "./app";

const root = document.querySelector<HTMLElement>("#app");
if (!root) throw new Error("missing #app mount point");
createApp(root, makeApi(""));
