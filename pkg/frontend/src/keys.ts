import { ConsoleSession } from './session.js';
import { ConsoleStore } from './store.js';

/**
 * Backstage keyboard map. Space fires the selected cue; destructive keys
 * only stage a confirm, Enter commits it.
 *
 *   up/down or k/j   move cue selection
 *   space            fire selected cue
 *   s                skip selected cue (asks to confirm)
 *   h                toggle hold / resume
 *   enter            confirm staged command
 *   escape           cancel staged command
 */
export function bindKeys(target: EventTarget, session: ConsoleSession, store: ConsoleStore): () => void {
  const onKey = (ev: Event) => {
    const key = (ev as KeyboardEvent).key;
    switch (key) {
      case 'ArrowDown':
      case 'j':
        store.moveSelection(1);
        break;
      case 'ArrowUp':
      case 'k':
        store.moveSelection(-1);
        break;
      case ' ':
        void session.fireSelected();
        break;
      case 's':
        session.skipSelected();
        break;
      case 'h':
        if (store.viewModel().held) void session.resume();
        else void session.hold();
        break;
      case 'Enter':
        void session.confirmStaged();
        break;
      case 'Escape':
        session.cancelStaged();
        break;
      default:
        return;
    }
    ev.preventDefault();
  };
  target.addEventListener('keydown', onKey);
  return () => target.removeEventListener('keydown', onKey);
}
