FIXED_COOKIE = '_S_IPAD=0;passport_auth_status_ss=284f6e476d...'
class RequestHeaders(BaseRequestHeaders):
    cookie: str = Field(default=FIXED_COOKIE, alias="Cookie")
