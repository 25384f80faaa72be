import { App } from './app.js';
import { setBaseUrl } from './api.js';

// Same-origin by default (the API can serve this bundle); override with
// <meta name="lrn-api" content="http://host:port"> for a separate host.
const meta = document.querySelector<HTMLMetaElement>('meta[name="lrn-api"]');
if (meta?.content) {
  setBaseUrl(meta.content);
}

const root = document.getElementById('app');
if (root) {
  void new App(root).start();
}
