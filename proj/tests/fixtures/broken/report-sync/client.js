const token = process.env.DASHBOARD_API_KEY;

function status() {
  console.log("dashboard token:", token);
}

module.exports = { status };
