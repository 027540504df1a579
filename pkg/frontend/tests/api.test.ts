import { describe, expect, it, vi } from "vitest";

import {
  AnnotationApi,
  ApiError,
  DuplicateAnnotationError,
} from "../src/api.js";
import { comparisonStudyTasks, MockServer } from "./mock_server.js";

describe("AnnotationApi", () => {
  it("fetches the next task with an encoded worker id", async () => {
    const calls: string[] = [];
    const fetchFn = vi.fn(async (input: RequestInfo | URL) => {
      calls.push(String(input));
      return new Response(JSON.stringify({ task: null }), { status: 200 });
    });
    const api = new AnnotationApi("", fetchFn as typeof fetch);
    expect(await api.nextTask("worker one")).toBeNull();
    expect(calls).toEqual(["/api/tasks/next?worker=worker%20one"]);
  });

  it("returns task records as served", async () => {
    const server = new MockServer(comparisonStudyTasks());
    const api = new AnnotationApi("", server.fetch);
    const task = await api.nextTask("w1");
    expect(task?.task_id).toBe("dp-1:room");
    expect(task?.level).toBe("room");
    expect(task?.states).toEqual([["tv", "ON"], ["curtains", "CLOSED"]]);
    expect(task?.votes_so_far).toBe(0);
  });

  it("posts annotations as JSON and parses the result", async () => {
    let captured: { url: string; init?: RequestInit } | null = null;
    const fetchFn = async (input: RequestInfo | URL, init?: RequestInit) => {
      captured = { url: String(input), init };
      return new Response(
        JSON.stringify({ status: "ok", task_id: "t-1", votes: 1, complete: true }),
        { status: 200 },
      );
    };
    const api = new AnnotationApi("", fetchFn as typeof fetch);
    const result = await api.submit("w1", "t-1", "CannotAnswer");
    expect(result.complete).toBe(true);
    expect(captured!.url).toBe("/api/annotations");
    expect(captured!.init?.method).toBe("POST");
    expect(JSON.parse(String(captured!.init?.body))).toEqual({
      worker: "w1",
      task_id: "t-1",
      answer: "CannotAnswer",
    });
  });

  it("maps 409 to DuplicateAnnotationError", async () => {
    const server = new MockServer(comparisonStudyTasks());
    const api = new AnnotationApi("", server.fetch);
    await api.submit("w1", "dp-1:room", "Yes");
    await expect(api.submit("w1", "dp-1:room", "No"))
      .rejects.toBeInstanceOf(DuplicateAnnotationError);
    expect(server.annotations).toHaveLength(1);
  });

  it("surfaces other failures as ApiError with the server detail", async () => {
    const server = new MockServer(comparisonStudyTasks());
    const api = new AnnotationApi("", server.fetch);
    const failure = api.submit("w1", "dp-99:room", "Yes");
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await expect(failure).rejects.toMatchObject({
      status: 404,
      message: "unknown task dp-99:room",
    });
  });

  it("reads progress", async () => {
    const server = new MockServer(comparisonStudyTasks());
    const api = new AnnotationApi("", server.fetch);
    await api.submit("w1", "dp-1:room", "Yes");
    const progress = await api.progress();
    expect(progress.total_tasks).toBe(6);
    expect(progress.completed_tasks).toBe(1);
    expect(progress.annotations_collected).toBe(1);
  });
});
