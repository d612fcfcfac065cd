import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";

interface Call {
  url: string;
  init?: { method?: string; body?: string };
}

function fakeFetch(
  status: number,
  body: unknown,
  calls: Call[] = [],
): FetchLike {
  return async (url, init) => {
    calls.push({ url, init });
    return { status, json: async () => body };
  };
}

describe("ApiClient", () => {
  it("posts session creation with source and config", async () => {
    const calls: Call[] = [];
    const snap = { session_id: "x", depth: 0, status: "active", beam: [] };
    const api = new ApiClient("http://h", fakeFetch(201, snap, calls));
    const got = await api.createSession(["a", "b"], { k: 3 });
    expect(got).toEqual(snap);
    expect(calls[0].url).toBe("http://h/sessions");
    expect(JSON.parse(calls[0].init!.body!)).toEqual({
      source: ["a", "b"],
      config: { k: 3 },
    });
  });

  it("posts steps with edits to the session endpoint", async () => {
    const calls: Call[] = [];
    const api = new ApiClient("http://h", fakeFetch(200, { depth: 1 }, calls));
    await api.step("sid", [{ index: 0, context: ["x"] }]);
    expect(calls[0].url).toBe("http://h/sessions/sid/step");
    expect(JSON.parse(calls[0].init!.body!)).toEqual({
      edits: [{ index: 0, context: ["x"] }],
    });
  });

  it("surfaces the service's structured errors", async () => {
    const api = new ApiClient(
      "http://h",
      fakeFetch(400, { error: { code: "bad_request", message: "nope" } }),
    );
    await expect(api.createSession(["a"])).rejects.toMatchObject({
      name: "ApiError",
      status: 400,
      code: "bad_request",
      message: "nope",
    });
  });

  it("wraps non-JSON responses as ApiError", async () => {
    const broken: FetchLike = async () => ({
      status: 200,
      json: async () => {
        throw new Error("bad");
      },
    });
    const api = new ApiClient("http://h", broken);
    await expect(api.health()).rejects.toBeInstanceOf(ApiError);
  });
});
