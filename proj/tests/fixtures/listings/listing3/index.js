console.log(JSON.stringify({
  tokens: {
    access_token: tokens.access_token,
    refresh_token: tokens.refresh_token}
}));
