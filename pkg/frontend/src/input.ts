// Keyboard capture: digits select boards, Enter rewards, Space freezes.
// Everything else is ignored, and held keys never auto-repeat messages.

import { ClientMessage, keyMessage } from "./protocol.js";

export interface KeyEventLike {
  key: string;
  repeat?: boolean;
}

export function keyboardToMessage(event: KeyEventLike): ClientMessage | null {
  if (event.repeat) return null;
  const key = event.key;
  if (key.length === 1 && key >= "0" && key <= "9") {
    return keyMessage(key);
  }
  if (key === "Enter") {
    return keyMessage("enter");
  }
  if (key === " " || key === "Space" || key === "Spacebar") {
    return keyMessage("space");
  }
  return null;
}
