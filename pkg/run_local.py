import json
import os
import sys
import logging

sys.path.append("src")

from experiment import run_experiment  # noqa: E402

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s"
)

# Local defaults; anything already exported wins
os.environ.setdefault("LOG_LEVEL", "INFO")
os.environ.setdefault("SUMSETLAB_BATCH_SIZE", "10")
os.environ.setdefault("SUMSETLAB_WORKERS", "1")


def main():
    event_path = sys.argv[1] if len(sys.argv) > 1 else "events/sumset.json"
    with open(event_path) as f:
        event = json.load(f)

    context = type(
        "Context",
        (),
        {"log_stream_name": "local", "function_name": "sumsetlab"},
    )()

    try:
        result = run_experiment(event, context)
        print(f"\nExperiment {event.get('command')} finished with status {result['statusCode']}")
        if not event.get("out"):
            print(result["artifact"])
        sys.exit(result["statusCode"])
    except KeyboardInterrupt:
        print("\nExecution interrupted by user")


if __name__ == "__main__":
    main()
