// Keyboard bindings: exactly one action id per bound key, covering all 7
// actions (arrows turn/move, P pickup, D drop, T toggle, Enter done).

export const ACTION_NAMES = [
  "turn left",
  "turn right",
  "forward",
  "pickup",
  "drop",
  "toggle",
  "done",
] as const;

const BINDINGS: Record<string, number> = {
  ArrowLeft: 0,
  ArrowRight: 1,
  ArrowUp: 2,
  p: 3,
  P: 3,
  d: 4,
  D: 4,
  t: 5,
  T: 5,
  Enter: 6,
};

export function actionForKey(key: string): number | null {
  return key in BINDINGS ? BINDINGS[key] : null;
}

export function boundActions(): Set<number> {
  return new Set(Object.values(BINDINGS));
}
