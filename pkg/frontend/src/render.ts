// HTML renderers for the wearable-style display. All functions are pure
// string builders: screen state is a function of the store snapshot, and
// every control carries data-action attributes for the event delegation
// in main.ts instead of inline handlers.
//
// Contract highlights:
//  - options appear in exactly the server-given order
//  - a suggested branch is highlighted, never auto-submitted
//  - an unacknowledged warning overlays the screen and makes the
//    underlying controls inert until acknowledged
//  - a tab strip appears only with more than one session

import type { GraphEntries, PromptPayload, WarningEventBody } from './types.js';
import { interactive, type SessionState, type Snapshot } from './store.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

// ---------------------------------------------------------------------------
// Prompt area
// ---------------------------------------------------------------------------

function renderOption(
  prompt: PromptPayload,
  option: PromptPayload['options'][number],
  extraClass: string,
): string {
  const suggested = prompt.suggested === option.key;
  const classes = ['option', extraClass, suggested ? 'suggested' : '']
    .filter(Boolean)
    .join(' ');
  return (
    `<button class="${classes}" data-action="decide"` +
    ` data-choice="${escapeHtml(option.key)}">` +
    `${escapeHtml(option.label)}${suggested ? '<span class="hint">suggested</span>' : ''}` +
    `</button>`
  );
}

export function renderAttachedValue(value: PromptPayload['attached_value']): string {
  if (value === null) return '';
  const range = value.in_range ? 'in-range' : 'out-of-range';
  const stale = value.stale ? ' <span class="stale">stale</span>' : '';
  return (
    `<div class="reading ${range}">` +
    `${escapeHtml(value.parameter)} ` +
    `<strong>${value.reading}</strong> ${escapeHtml(value.unit)}${stale}` +
    `</div>`
  );
}

export function renderPrompt(state: SessionState): string {
  const prompt = state.prompt;
  if (prompt === null) {
    if (state.status === 'stopped') {
      return `<div class="prompt ended">session stopped at ${escapeHtml(state.current)}</div>`;
    }
    if (state.status === 'awaiting_value') {
      return `<div class="prompt waiting">waiting for a patient value at ${escapeHtml(state.current)}&hellip;</div>`;
    }
    return `<div class="prompt waiting">&hellip;</div>`;
  }

  const invasive = prompt.invasive
    ? '<div class="flag invasive">invasive procedure</div>'
    : '';
  const infoButton = prompt.info_available
    ? '<button class="info-toggle" data-action="toggle-info">info</button>'
    : '';
  const header =
    `<header class="prompt-header">${invasive}` +
    `<h2>${escapeHtml(prompt.title)}</h2>${infoButton}</header>`;

  let controls: string;
  switch (prompt.kind) {
    case 'binary':
      controls = `<div class="choices binary">${prompt.options
        .map((o) => renderOption(prompt, o, 'large'))
        .join('')}</div>`;
      break;
    case 'multi_choice':
      controls = `<ol class="choices ranked">${prompt.options
        .map((o) => `<li>${renderOption(prompt, o, 'ranked')}</li>`)
        .join('')}</ol>`;
      break;
    case 'acknowledge':
      controls = `<div class="choices single">${prompt.options
        .map((o) => renderOption(prompt, o, 'large'))
        .join('')}</div>`;
      break;
    case 'value_confirmation':
    case 'path_change_confirmation': {
      const suggestedOption = prompt.options.find((o) => o.key === prompt.suggested);
      const suggestion = suggestedOption
        ? `<div class="suggestion">suggested: <em>${escapeHtml(suggestedOption.label)}</em></div>`
        : '';
      controls =
        renderAttachedValue(prompt.attached_value) +
        suggestion +
        `<div class="choices confirm">` +
        `<button class="option large approve" data-action="confirm" data-approve="true">approve</button>` +
        `<button class="option large decline" data-action="confirm" data-approve="false">override</button>` +
        `</div>`;
      break;
    }
  }

  const procedures = prompt.linked_procedures.length
    ? `<nav class="procedures">${prompt.linked_procedures
        .map(
          (p) =>
            `<button class="jump" data-action="jump" data-target="${escapeHtml(p.target)}">` +
            `${escapeHtml(p.name)}</button>`,
        )
        .join('')}</nav>`
    : '';

  return `<div class="prompt kind-${prompt.kind}">${header}${controls}${procedures}</div>`;
}

// ---------------------------------------------------------------------------
// Chrome: warning overlay, tabs, info panel, connection banner
// ---------------------------------------------------------------------------

export function renderWarningOverlay(warning: WarningEventBody): string {
  return (
    `<div class="overlay warning" role="alertdialog">` +
    `<p>${escapeHtml(warning.message)}</p>` +
    `<button class="option large" data-action="ack-warning">acknowledge</button>` +
    `</div>`
  );
}

export function renderTabs(snapshot: Snapshot): string {
  if (snapshot.sessions.length <= 1) return '';
  const tabs = snapshot.sessions
    .map((s) => {
      const classes = [
        'tab',
        s.sessionId === snapshot.activeId ? 'active' : '',
        s.status === 'stopped' ? 'stopped' : '',
      ]
        .filter(Boolean)
        .join(' ');
      const badge = s.warningBadge ? '<span class="badge"></span>' : '';
      return (
        `<button class="${classes}" data-action="activate"` +
        ` data-session="${escapeHtml(s.sessionId)}">` +
        `${escapeHtml(s.patientLabel)}${badge}</button>`
      );
    })
    .join('');
  return `<nav class="tabs">${tabs}</nav>`;
}

export function renderInfoPanel(state: SessionState): string {
  if (state.infoItems === null) return '';
  const body = state.infoItems.length
    ? `<ul>${state.infoItems
        .map((i) => `<li class="info-${escapeHtml(i.kind)}">${escapeHtml(i.name)}</li>`)
        .join('')}</ul>`
    : '<p class="empty">no additional information for this step</p>';
  return (
    `<aside class="info-panel">${body}` +
    `<button data-action="close-info">close</button></aside>`
  );
}

function renderConnection(state: SessionState): string {
  if (state.connection === 'open') return '';
  return `<div class="banner connection">${escapeHtml(state.connection)}&hellip;</div>`;
}

// ---------------------------------------------------------------------------
// Whole screen
// ---------------------------------------------------------------------------

export function renderSession(state: SessionState, isActive: boolean): string {
  const warning = state.warnings[0];
  const overlay = warning !== undefined ? renderWarningOverlay(warning) : '';
  // inert keeps the path controls visible but untouchable while a warning
  // waits for its acknowledgment or a request is in flight
  const blocked = !(isActive && interactive(state));
  const path = state.pathLabel
    ? `<div class="path-label">${escapeHtml(state.pathLabel)}</div>`
    : '';
  return (
    `<section class="session" data-session="${escapeHtml(state.sessionId)}">` +
    renderConnection(state) +
    `<div class="stage${blocked ? ' inert' : ''}"${blocked ? ' inert' : ''}>` +
    path +
    renderPrompt(state) +
    renderInfoPanel(state) +
    `</div>` +
    overlay +
    `</section>`
  );
}

export function renderEntryPicker(entries: GraphEntries): string {
  const group = (label: string, refs: GraphEntries['bprs']) =>
    refs.length
      ? `<section class="entry-group"><h3>${escapeHtml(label)}</h3>` +
        refs
          .map(
            (r) =>
              `<button class="option" data-action="create" data-entry="${escapeHtml(r.id)}">` +
              `${escapeHtml(r.name)}</button>`,
          )
          .join('') +
        `</section>`
      : '';
  return (
    `<div class="entry-picker">` +
    group('assessment', [entries.start]) +
    group('treatment paths', entries.bprs) +
    group('procedures', entries.saas) +
    group('disease groups', entries.disease_groups) +
    `</div>`
  );
}

export function renderScreen(snapshot: Snapshot): string {
  const active = snapshot.sessions.find((s) => s.sessionId === snapshot.activeId);
  const body = active
    ? renderSession(active, true)
    : '<div class="empty">no session; pick an entry point</div>';
  return renderTabs(snapshot) + body;
}
