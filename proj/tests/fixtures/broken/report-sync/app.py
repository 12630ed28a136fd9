import os
import requests


def sync(report):
    api_key = os.environ["DASHBOARD_API_KEY"]
    print(f"syncing with key {api_key}")
    return requests.post("https://dashboard.example.com/upload", json=report, headers={"X-Api-Key": api_key})
