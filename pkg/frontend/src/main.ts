import { ApiClient } from './api.js';
import { createApp } from './app.js';

const root = document.getElementById('app');
if (root !== null) {
  // same-origin deployment: the UI is served next to /api
  createApp(document, new ApiClient(''), window.localStorage, root).start();
}
