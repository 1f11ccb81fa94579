import { GameClient } from "./client.js";
import { Renderer } from "./render.js";

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session") ?? "base";
const playerName = params.get("name") ?? "Player A";
const host = params.get("server") ?? window.location.host;

const canvas = document.getElementById("screen") as HTMLCanvasElement;
const renderer = new Renderer(canvas);

const client = new GameClient({
  url: `ws://${host}/ws`,
  sessionId,
  playerName,
  onChange: (vm) => renderer.render(vm),
});
client.start();
