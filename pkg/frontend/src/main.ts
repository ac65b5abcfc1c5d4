// Entry point: wire the annotation view and the dashboard to the same-origin
// service. Accepted submissions refresh the dashboard so counts and the
// learning curve track the session live.

import { makeApi } from "./api";
import { mountAnnotator } from "./annotator";
import { mountDashboard } from "./dashboard";

const api = makeApi("");
const dashboard = mountDashboard(document.getElementById("dashboard")!, api);
mountAnnotator(document.getElementById("annotator")!, api, {
  onSubmitted: () => void dashboard.refresh(),
});
