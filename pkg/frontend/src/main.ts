import { HttpTransport } from './transport.js';
import { ConsoleStore } from './store.js';
import { ConsoleSession } from './session.js';
import { ConsolePanel } from './panel.js';
import { bindKeys } from './keys.js';

// ?server=http://host:port overrides the default show server address
const params = new URLSearchParams(location.search);
const base = params.get('server') ?? 'http://127.0.0.1:8750';

const store = new ConsoleStore();
const session = new ConsoleSession(new HttpTransport(base), store);
new ConsolePanel(document.getElementById('console') as HTMLElement, session, store);
bindKeys(window, session, store);

void session.connect();
