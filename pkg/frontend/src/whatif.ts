/** Remedy what-if panel: pick remedies, run, read the verdict. */

import type { CaseStore } from './store.js';

export const REMEDY_CHOICES = [
  'BackupComms',
  'WifiFailureMaintenanceAlert',
  'HubDirectEmergencyCall',
  'ImprovedMicRange',
  'BraceletReminder',
  'NoDisinfectant',
];

export function renderWhatIf(root: HTMLElement, store: CaseStore): void {
  root.textContent = '';
  const heading = document.createElement('h3');
  heading.textContent = 'Remedy what-if';
  root.appendChild(heading);

  const form = document.createElement('div');
  form.className = 'whatif-form';
  const boxes: HTMLInputElement[] = [];
  for (const remedy of REMEDY_CHOICES) {
    const label = document.createElement('label');
    const box = document.createElement('input');
    box.type = 'checkbox';
    box.value = remedy;
    if (store.lastWhatIf?.remedies.includes(remedy)) box.checked = true;
    boxes.push(box);
    label.appendChild(box);
    label.appendChild(document.createTextNode(' ' + remedy));
    form.appendChild(label);
  }
  const runButton = document.createElement('button');
  runButton.textContent = 'Run what-if';
  runButton.addEventListener('click', () => {
    const selected = boxes.filter((b) => b.checked).map((b) => b.value);
    void store.runWhatIf(selected);
  });
  form.appendChild(runButton);
  const validateButton = document.createElement('button');
  validateButton.textContent = 'Validate all recommendations';
  validateButton.addEventListener('click', () => void store.validateRecommendations());
  form.appendChild(validateButton);
  root.appendChild(form);

  const result = store.lastWhatIf;
  if (result) {
    const panel = document.createElement('div');
    panel.className = result.alarmMishapPrevented ? 'outcome good' : 'outcome bad';
    const headline = document.createElement('p');
    if (!result.outcome.fall_occurred) {
      headline.textContent = 'No fall occurs in this world.';
    } else if (result.alarmMishapPrevented) {
      headline.textContent = `Alarm mishap prevented, route: ${result.outcome.alarm_route}`;
    } else {
      headline.textContent = 'Alarm mishap still occurs';
    }
    panel.appendChild(headline);
    const detail = document.createElement('p');
    detail.className = 'outcome-detail';
    detail.textContent =
      `mishaps: ${result.outcome.mishaps.join(', ') || 'none'} · ` +
      `records: ${result.outcome.record_count} · run ${result.outcome.run_id}`;
    panel.appendChild(detail);
    root.appendChild(panel);
  }

  const recHeading = document.createElement('h4');
  recHeading.textContent = 'Recommendations (by priority)';
  root.appendChild(recHeading);
  const list = document.createElement('ol');
  for (const rec of [...store.recommendations].sort((a, b) => a.priority - b.priority)) {
    const item = document.createElement('li');
    const status = rec.validated ? 'validated' : 'not validated';
    item.textContent = `${rec.text} — ${status}`;
    item.className = rec.validated ? 'rec validated' : 'rec';
    list.appendChild(item);
  }
  root.appendChild(list);
}
