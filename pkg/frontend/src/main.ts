import { boot } from './controller';

const root = document.getElementById('app');
if (root) {
  // same-origin by default: the wizard is served by the session service
  boot(root);
}
