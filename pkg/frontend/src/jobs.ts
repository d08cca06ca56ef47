// Export-job submission and polling.

import type { ConsoleApi } from "./api.js";
import type { JobBody, JobDoc } from "./types.js";

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export interface WatchOptions {
  intervalMs?: number;
  maxPolls?: number;
  onUpdate?: (job: JobDoc) => void;
}

/** Submit a job and poll until it settles. Resolves with the final
 * document for both done and failed jobs; callers read job.state. */
export async function runJob(
  api: ConsoleApi,
  body: JobBody,
  opts: WatchOptions = {},
): Promise<JobDoc> {
  const { intervalMs = 500, maxPolls = 10_000, onUpdate } = opts;
  let job = await api.createJob(body);
  onUpdate?.(job);
  let polls = 0;
  while (job.state === "queued" || job.state === "running") {
    if (++polls > maxPolls) throw new Error(`job ${job.job_id} still ${job.state} after ${maxPolls} polls`);
    await sleep(intervalMs);
    job = await api.getJob(job.job_id);
    onUpdate?.(job);
  }
  return job;
}
