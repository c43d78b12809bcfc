#!/usr/bin/env python3
"""Drive the pairwise-judge HTTP client against a toy local service.

The external judge backend sends one chat-completion-style POST per
match ({system, user, max_tokens}) and expects the literal verdict
"Output (a)" or "Output (b)" back. Here a local server plays judge with
a crude heuristic (longer answer wins) so the whole loop (template
rendering, position alternation, verdict parsing, grid caching) runs
end to end without any real API.
"""

import http.server
import json
import threading

from eloarena import (
    ExternalJudge,
    OutputStore,
    Prompt,
    PromptSet,
    PromptTemplate,
    build_full_grid_cache,
)


class LongerAnswerJudge(http.server.BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        user = body["user"]
        # crude parse of the two responses out of the rendered prompt
        part_a = user.split("# Output (a):", 1)[1].split("# Output (b):", 1)
        response_a, rest = part_a[0], part_a[1]
        response_b = rest.split("# Questions about Outputs:", 1)[0]
        verdict = "Output (a)" if len(response_a) >= len(response_b) else "Output (b)"
        payload = json.dumps({"text": verdict}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), LongerAnswerJudge)
threading.Thread(target=server.serve_forever, daemon=True).start()
endpoint = f"http://127.0.0.1:{server.server_port}/v1/judge"
print(f"toy judge listening on {endpoint}")

prompts = PromptSet(
    (
        Prompt("q-greet", "Write a greeting"),
        Prompt("q-haiku", "Write a haiku about rivers"),
        Prompt("q-sum", "Summarize the plot of Hamlet"),
    )
)
models = ["terse-bot", "verbose-bot", "medium-bot"]
outputs = OutputStore()
for prompt in prompts:
    outputs.put(prompt.prompt_id, "terse-bot", "ok")
    outputs.put(prompt.prompt_id, "medium-bot", "a reasonable, measured answer")
    outputs.put(
        prompt.prompt_id,
        "verbose-bot",
        "an exhaustively thorough answer that goes on and on, covering every angle",
    )

judge = ExternalJudge(endpoint=endpoint, template=PromptTemplate.default(), timeout=5.0)
report = build_full_grid_cache(models, prompts, judge, outputs, concurrency=4)
server.shutdown()

print(f"judged {report.judged} matches over HTTP, failures: {len(report.failures)}")
for prompt_id, entry in report.cache.entries():
    print(f"  {prompt_id}: {entry.first} vs {entry.second} -> {entry.winner}")
print("\nverbose-bot should have swept every pair it appeared in.")
