import { ApiClient } from './api.js';
import { WorkbenchController } from './controller.js';
import { Panels } from './panels.js';
async function boot() {
    const controller = new WorkbenchController(new ApiClient(undefined, (rev) => controller.noteRevision(rev)));
    const panels = new Panels(controller);
    controller.view = panels.hooks();
    panels.bind();
    await controller.start();
    panels.note(`session ${controller.state.sessionId} ready: upload a CSV`);
}
document.addEventListener('DOMContentLoaded', () => {
    void boot();
});
