import os

def upload(report:
    key = os.environ["DASHBOARD_API_KEY"]
    print("using", key
