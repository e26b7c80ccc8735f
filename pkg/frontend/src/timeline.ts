/** Timeline lanes: one row per channel, gap bands, event markers. */

import type { GapInterval, RecordRow } from './types.js';

export const LANE_ORDER = [
  'ConnectivityStatus',
  'PositionEstimate',
  'BatteryStatus',
  'SpeechText',
  'DecisionEvent',
  'ActuatorCommand',
  'TouchEvent',
  'SenseSample',
  'AudioSample',
];

export interface LaneMark {
  seq: number;
  tMonoNs: number;
  x: number; // 0..1 across the selected window
  summary: string;
  emphasis: boolean; // speech, decisions, connectivity transitions
}

export interface Lane {
  channel: string;
  marks: LaneMark[];
}

export interface GapBand {
  x0: number;
  x1: number;
  channel: string;
}

export interface TimelineModel {
  lanes: Lane[];
  bands: GapBand[];
  t0: number;
  t1: number;
  recordCount: number;
}

const EMPHASIS_CHANNELS = new Set(['SpeechText', 'DecisionEvent']);

export function buildTimeline(
  records: RecordRow[],
  gaps: GapInterval[],
  window?: { t0?: number; t1?: number },
): TimelineModel {
  if (!records.length) {
    return { lanes: [], bands: [], t0: 0, t1: 1, recordCount: 0 };
  }
  const t0 = window?.t0 ?? records[0]!.t_mono_ns;
  const t1 = window?.t1 ?? records[records.length - 1]!.t_mono_ns;
  const span = Math.max(1, t1 - t0);
  const byChannel = new Map<string, LaneMark[]>();
  let count = 0;
  let prevHub: boolean | null = null;
  for (const row of records) {
    if (row.t_mono_ns < t0 || row.t_mono_ns > t1) continue;
    count += 1;
    let emphasis = EMPHASIS_CHANNELS.has(row.channel);
    if (row.channel === 'ConnectivityStatus') {
      const hubUp = !row.summary.includes('hub=down');
      emphasis = prevHub !== null && hubUp !== prevHub;
      prevHub = hubUp;
    }
    const marks = byChannel.get(row.channel) ?? [];
    marks.push({
      seq: row.seq,
      tMonoNs: row.t_mono_ns,
      x: (row.t_mono_ns - t0) / span,
      summary: row.summary,
      emphasis,
    });
    byChannel.set(row.channel, marks);
  }
  const lanes: Lane[] = [];
  for (const channel of LANE_ORDER) {
    const marks = byChannel.get(channel);
    if (marks) lanes.push({ channel, marks });
  }
  for (const [channel, marks] of byChannel) {
    if (!LANE_ORDER.includes(channel)) lanes.push({ channel, marks });
  }
  const bands: GapBand[] = gaps
    .filter((g) => g.end_t_mono_ns >= t0 && g.start_t_mono_ns <= t1)
    .map((g) => ({
      x0: Math.max(0, (g.start_t_mono_ns - t0) / span),
      x1: Math.min(1, (g.end_t_mono_ns - t0) / span),
      channel: g.channel,
    }));
  return { lanes, bands, t0, t1, recordCount: count };
}

export function renderTimeline(root: HTMLElement, model: TimelineModel): void {
  root.textContent = '';
  if (!model.lanes.length) {
    const empty = document.createElement('p');
    empty.className = 'empty';
    empty.textContent = 'No telemetry in this window.';
    root.appendChild(empty);
    return;
  }
  const frame = document.createElement('div');
  frame.className = 'timeline-frame';
  for (const band of model.bands) {
    const el = document.createElement('div');
    el.className = 'gap-band';
    el.style.left = `${band.x0 * 100}%`;
    el.style.width = `${(band.x1 - band.x0) * 100}%`;
    el.title = `connectivity gap (${band.channel})`;
    frame.appendChild(el);
  }
  for (const lane of model.lanes) {
    const row = document.createElement('div');
    row.className = 'lane';
    const label = document.createElement('span');
    label.className = 'lane-label';
    label.textContent = lane.channel;
    row.appendChild(label);
    const track = document.createElement('div');
    track.className = 'lane-track';
    for (const mark of lane.marks) {
      const dot = document.createElement('i');
      dot.className = mark.emphasis ? 'mark emphasis' : 'mark';
      dot.style.left = `${mark.x * 100}%`;
      dot.title = `#${mark.seq} ${mark.summary}`;
      track.appendChild(dot);
    }
    row.appendChild(track);
    frame.appendChild(row);
  }
  root.appendChild(frame);
}
