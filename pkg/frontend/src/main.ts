// Bootstrap: pick a stimulus (from ?stimulus=, else the first catalog
// entry), create a session for the participant named in ?participant=, and
// mount the UI. Stimuli with a media URL get a video-backed clock; others
// get the manual clock.

import { ApiClient } from "./api.js";
import { ManualPlayback, Playback, VideoPlayback } from "./playback.js";
import { SessionController } from "./state.js";
import { mountAnnotationUi } from "./ui.js";

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const params = new URLSearchParams(window.location.search);
  const participant = params.get("participant") ?? "P01";

  const stimuli = await api.listStimuli();
  if (stimuli.length === 0) {
    document.body.textContent = "no stimuli configured";
    return;
  }
  const wanted = params.get("stimulus");
  const stimulus = stimuli.find((s) => s.stimulus_id === wanted) ?? stimuli[0];

  let playback: Playback;
  if (stimulus.media_url) {
    const video = document.createElement("video");
    video.src = stimulus.media_url;
    video.controls = false;
    video.style.maxWidth = "100%";
    document.body.appendChild(video);
    playback = new VideoPlayback(video, stimulus.duration_s);
  } else {
    playback = new ManualPlayback(stimulus.duration_s);
  }

  const vocabulary = await api.vocabulary();
  const controller = new SessionController(api, playback);
  await controller.start(participant, stimulus);
  const ui = mountAnnotationUi(document.body, controller, vocabulary);
  ui.root.tabIndex = 0;
  ui.root.focus();
}

void boot().catch((err) => {
  document.body.textContent = `failed to start: ${String(err)}`;
});
